#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stuperf/errors.hpp"
#include "stuperf/matrix.hpp"

namespace stuperf {

/// Columnar table of raw string cells as parsed from a CSV file.
struct RawTable {
    struct Column {
        std::string name;
        std::vector<std::string> values;
    };
    std::vector<Column> columns;
    std::size_t row_count = 0;

    const Column* find_column(const std::string& name) const;
};

/// Per-column ordinal maps plus the pass-through numeric columns.
/// Categories are coded alphabetically from 0.
struct EncodingSchema {
    std::map<std::string, std::map<std::string, int>> ordinal_maps;
    std::vector<std::string> numeric_columns;
    std::string target_column = "G3";
};

/// Per-feature min/max fitted on training rows.
struct Scaler {
    std::vector<std::pair<double, double>> ranges;  // (min, max) per feature
};

/// Encoded real-valued dataset: feature matrix plus target vector.
struct NumericTable {
    Matrix features;
    std::vector<double> target;
    std::vector<std::string> feature_names;

    std::size_t n_rows() const { return features.rows; }
    std::size_t n_features() const { return features.cols; }
};

/// Parse delimited text with a header row. Delimiter is ';' or ',',
/// auto-detected from the header (';' wins when both appear).
RawTable parse_table(const std::string& csv_text);

RawTable parse_table_file(const std::string& path);

EncodingSchema build_encoding_schema(const RawTable& raw, const std::string& target);

NumericTable encode(const RawTable& raw, const EncodingSchema& schema);

/// Seeded shuffle split; train gets floor(train_fraction * n) rows.
std::pair<NumericTable, NumericTable> split_train_test(const NumericTable& table,
                                                       double train_fraction,
                                                       std::uint64_t seed);

Scaler fit_minmax(const NumericTable& train);

/// x -> (x - min) / (max - min); constant features map to 0. No clamping,
/// and the target is left in its original units.
NumericTable apply_minmax(const Scaler& scaler, const NumericTable& table);

/// Row subset helper used when carving out clusters.
NumericTable take_rows(const NumericTable& table, const std::vector<std::size_t>& rows);

/// Drop named feature columns (e.g. G1/G2); missing names are an error.
NumericTable drop_features(const NumericTable& table, const std::vector<std::string>& names);

bool is_numeric_string(const std::string& s);

}  // namespace stuperf
