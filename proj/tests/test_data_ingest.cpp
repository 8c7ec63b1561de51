#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "stuperf/data_ingest.hpp"

using namespace stuperf;

namespace {

RawTable fjob_table() {
    return parse_table(
        "Fjob;G3\n"
        "at_home;10\n"
        "health;11\n"
        "other;12\n"
        "services;13\n"
        "teacher;14\n");
}

}  // namespace

TEST_CASE("parse_table handles minimal semicolon input") {
    RawTable t = parse_table("sex;age\nF;18\n");
    CHECK(t.columns.size() == 2);
    CHECK(t.row_count == 1);
    CHECK(t.columns[0].name == "sex");
    CHECK(t.columns[0].values[0] == "F");
    CHECK(t.columns[1].values[0] == "18");
}

TEST_CASE("parse_table auto-detects comma delimiter") {
    RawTable t = parse_table("a,b\n1,2\n3,4\n");
    CHECK(t.columns.size() == 2);
    CHECK(t.row_count == 2);
}

TEST_CASE("semicolon wins when both delimiters appear in the header") {
    RawTable t = parse_table("a,x;b\n1;2\n");
    CHECK(t.columns.size() == 2);
    CHECK(t.columns[0].name == "a,x");
}

TEST_CASE("quoted fields are unquoted") {
    RawTable t = parse_table("a;b\n\"GP\";\"yes;no\"\n");
    CHECK(t.columns[0].values[0] == "GP");
    CHECK(t.columns[1].values[0] == "yes;no");
}

TEST_CASE("ragged row raises a parse error naming the line") {
    CHECK_THROWS_WITH_AS(parse_table("a;b\n1;2\n3\n"),
                         doctest::Contains("line 3"), ParseError);
}

TEST_CASE("duplicate header is a schema error") {
    CHECK_THROWS_AS(parse_table("a;a\n1;2\n"), SchemaError);
}

TEST_CASE("empty cells are rejected") {
    CHECK_THROWS_AS(parse_table("a;b\n1;\n"), ParseError);
}

TEST_CASE("empty text is a parse error") {
    CHECK_THROWS_AS(parse_table(""), ParseError);
}

TEST_CASE("alphabetical ordinal reproduces the Fjob codes") {
    RawTable t = fjob_table();
    EncodingSchema schema = build_encoding_schema(t, "G3");
    const auto& codes = schema.ordinal_maps.at("Fjob");
    CHECK(codes.at("at_home") == 0);
    CHECK(codes.at("health") == 1);
    CHECK(codes.at("other") == 2);
    CHECK(codes.at("services") == 3);
    CHECK(codes.at("teacher") == 4);
}

TEST_CASE("binary category is coded alphabetically") {
    RawTable t = parse_table("sex;G3\nF;10\nM;11\n");
    EncodingSchema schema = build_encoding_schema(t, "G3");
    CHECK(schema.ordinal_maps.at("sex").at("F") == 0);
    CHECK(schema.ordinal_maps.at("sex").at("M") == 1);
}

TEST_CASE("all-numeric table has no ordinal maps") {
    RawTable t = parse_table("a;G3\n1;10\n2;11\n");
    EncodingSchema schema = build_encoding_schema(t, "G3");
    CHECK(schema.ordinal_maps.empty());
    CHECK(schema.numeric_columns.size() == 2);
}

TEST_CASE("non-numeric target is a schema error") {
    RawTable t = parse_table("a;G3\n1;low\n");
    CHECK_THROWS_AS(build_encoding_schema(t, "G3"), SchemaError);
}

TEST_CASE("encode maps categories and splits the target out") {
    RawTable t = fjob_table();
    EncodingSchema schema = build_encoding_schema(t, "G3");
    NumericTable n = encode(t, schema);
    CHECK(n.n_features() == 1);
    CHECK(n.feature_names[0] == "Fjob");
    CHECK(n.features.at(4, 0) == 4.0);  // teacher
    CHECK(n.features.at(2, 0) == 2.0);  // other
    CHECK(n.target[0] == 10.0);
}

TEST_CASE("numeric strings pass through unchanged") {
    RawTable t = parse_table("a;G3\n1.5;10\n-2;11\n");
    NumericTable n = encode(t, build_encoding_schema(t, "G3"));
    CHECK(n.features.at(0, 0) == 1.5);
    CHECK(n.features.at(1, 0) == -2.0);
}

TEST_CASE("unseen category is an encoding error naming column and value") {
    RawTable t = fjob_table();
    EncodingSchema schema = build_encoding_schema(t, "G3");
    RawTable t2 = parse_table("Fjob;G3\nastronaut;9\n");
    CHECK_THROWS_WITH_AS(encode(t2, schema), doctest::Contains("astronaut"), EncodingError);
}

TEST_CASE("encoding is deterministic") {
    RawTable t = fjob_table();
    NumericTable a = encode(t, build_encoding_schema(t, "G3"));
    NumericTable b = encode(t, build_encoding_schema(t, "G3"));
    CHECK(a.features == b.features);
    CHECK(a.target == b.target);
}

TEST_CASE("split sizes follow the floor rule") {
    NumericTable t;
    t.features = Matrix(10, 1);
    for (std::size_t i = 0; i < 10; ++i) {
        t.features.at(i, 0) = static_cast<double>(i);
        t.target.push_back(static_cast<double>(i));
    }
    auto [train, test] = split_train_test(t, 0.7, 42);
    CHECK(train.n_rows() == 7);
    CHECK(test.n_rows() == 3);

    // 395 rows: floor(276.5) = 276.
    NumericTable big;
    big.features = Matrix(395, 1);
    big.target.assign(395, 0.0);
    auto [btrain, btest] = split_train_test(big, 0.7, 1);
    CHECK(btrain.n_rows() == 276);
    CHECK(btest.n_rows() == 119);
}

TEST_CASE("split is a deterministic exact partition") {
    NumericTable t;
    t.features = Matrix(25, 1);
    for (std::size_t i = 0; i < 25; ++i) {
        t.features.at(i, 0) = static_cast<double>(i);
        t.target.push_back(static_cast<double>(i) * 2);
    }
    auto [a_train, a_test] = split_train_test(t, 0.6, 7);
    auto [b_train, b_test] = split_train_test(t, 0.6, 7);
    CHECK(a_train.features == b_train.features);
    CHECK(a_test.features == b_test.features);

    std::multiset<double> seen;
    for (std::size_t i = 0; i < a_train.n_rows(); ++i) seen.insert(a_train.features.at(i, 0));
    for (std::size_t i = 0; i < a_test.n_rows(); ++i) seen.insert(a_test.features.at(i, 0));
    CHECK(seen.size() == 25);
    std::multiset<double> expected;
    for (std::size_t i = 0; i < 25; ++i) expected.insert(static_cast<double>(i));
    CHECK(seen == expected);
}

TEST_CASE("split rejects tiny tables") {
    NumericTable t;
    t.features = Matrix(1, 1);
    t.target = {1.0};
    CHECK_THROWS_AS(split_train_test(t, 0.7, 1), ArgumentError);
}

TEST_CASE("fit_minmax records per-feature ranges independently") {
    NumericTable t;
    t.features = Matrix(3, 2);
    double col0[] = {0, 10, 20};
    double col1[] = {5, 5, 5};
    for (std::size_t i = 0; i < 3; ++i) {
        t.features.at(i, 0) = col0[i];
        t.features.at(i, 1) = col1[i];
    }
    t.target.assign(3, 0.0);
    Scaler s = fit_minmax(t);
    CHECK(s.ranges[0] == std::pair<double, double>(0.0, 20.0));
    CHECK(s.ranges[1] == std::pair<double, double>(5.0, 5.0));
}

TEST_CASE("apply_minmax scales, leaves the target alone, does not clamp") {
    NumericTable t;
    t.features = Matrix(3, 1);
    t.features.at(0, 0) = 0;
    t.features.at(1, 0) = 10;
    t.features.at(2, 0) = 20;
    t.target = {15.0, 16.0, 17.0};
    Scaler s = fit_minmax(t);
    NumericTable scaled = apply_minmax(s, t);
    CHECK(scaled.features.at(0, 0) == 0.0);
    CHECK(scaled.features.at(1, 0) == 0.5);
    CHECK(scaled.features.at(2, 0) == 1.0);
    CHECK(scaled.target == t.target);

    NumericTable outside;
    outside.features = Matrix(1, 1);
    outside.features.at(0, 0) = 25.0;
    outside.target = {0.0};
    CHECK(apply_minmax(s, outside).features.at(0, 0) == doctest::Approx(1.25));
}

TEST_CASE("constant feature maps to zero") {
    NumericTable t;
    t.features = Matrix(2, 1, 5.0);
    t.target = {0.0, 0.0};
    NumericTable scaled = apply_minmax(fit_minmax(t), t);
    CHECK(scaled.features.at(0, 0) == 0.0);
    CHECK(scaled.features.at(1, 0) == 0.0);
}

TEST_CASE("apply_minmax rejects feature-count mismatch") {
    NumericTable t;
    t.features = Matrix(2, 2, 1.0);
    t.target = {0.0, 0.0};
    Scaler s;
    s.ranges = {{0.0, 1.0}};
    CHECK_THROWS_AS(apply_minmax(s, t), ShapeError);
}

TEST_CASE("scaling the fitting rows lands in [0,1]") {
    NumericTable t;
    t.features = Matrix(20, 3);
    std::uint64_t x = 88172645463325252ULL;
    for (auto& v : t.features.data) {
        x ^= x << 13; x ^= x >> 7; x ^= x << 17;
        v = static_cast<double>(x % 1000) / 7.0 - 40.0;
    }
    t.target.assign(20, 0.0);
    NumericTable scaled = apply_minmax(fit_minmax(t), t);
    for (double v : scaled.features.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("drop_features removes named columns") {
    RawTable t = parse_table("G1;G2;x;G3\n1;2;3;10\n4;5;6;11\n");
    NumericTable n = encode(t, build_encoding_schema(t, "G3"));
    NumericTable dropped = drop_features(n, {"G1", "G2"});
    CHECK(dropped.n_features() == 1);
    CHECK(dropped.feature_names[0] == "x");
    CHECK(dropped.features.at(1, 0) == 6.0);
    CHECK_THROWS_AS(drop_features(n, {"missing"}), ArgumentError);
}
