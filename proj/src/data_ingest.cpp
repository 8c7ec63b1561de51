#include "stuperf/data_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "stuperf/rng.hpp"

namespace stuperf {

const RawTable::Column* RawTable::find_column(const std::string& name) const {
    for (const auto& col : columns) {
        if (col.name == name) return &col;
    }
    return nullptr;
}

bool is_numeric_string(const std::string& s) {
    if (s.empty()) return false;
    double value = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    return ec == std::errc() && ptr == last;
}

namespace {

double parse_numeric(const std::string& s, const std::string& column) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw EncodingError("non-numeric value '" + s + "' in numeric column '" + column + "'");
    }
    return value;
}

std::vector<std::string> split_line(const std::string& line, char delim, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && field.empty()) {
            in_quotes = true;
        } else if (c == delim) {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    if (in_quotes) {
        throw ParseError("unterminated quote on line " + std::to_string(line_no));
    }
    fields.push_back(std::move(field));
    return fields;
}

}  // namespace

RawTable parse_table(const std::string& csv_text) {
    if (csv_text.empty()) throw ParseError("empty input");

    std::istringstream stream(csv_text);
    std::string line;
    if (!std::getline(stream, line)) throw ParseError("missing header line");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const char delim = line.find(';') != std::string::npos ? ';' : ',';

    RawTable table;
    auto header = split_line(line, delim, 1);
    std::set<std::string> seen;
    for (auto& name : header) {
        if (!seen.insert(name).second) {
            throw SchemaError("duplicate header name '" + name + "'");
        }
        table.columns.push_back({std::move(name), {}});
    }

    std::size_t line_no = 1;
    while (std::getline(stream, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_line(line, delim, line_no);
        if (fields.size() != table.columns.size()) {
            throw ParseError("ragged row on line " + std::to_string(line_no) + ": expected " +
                             std::to_string(table.columns.size()) + " fields, got " +
                             std::to_string(fields.size()));
        }
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (fields[i].empty()) {
                throw ParseError("empty cell in column '" + table.columns[i].name + "' on line " +
                                 std::to_string(line_no));
            }
            table.columns[i].values.push_back(std::move(fields[i]));
        }
        ++table.row_count;
    }
    return table;
}

RawTable parse_table_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_table(buffer.str());
}

EncodingSchema build_encoding_schema(const RawTable& raw, const std::string& target) {
    const auto* target_col = raw.find_column(target);
    if (target_col == nullptr) throw SchemaError("target column '" + target + "' not found");
    for (const auto& v : target_col->values) {
        if (!is_numeric_string(v)) {
            throw SchemaError("target column '" + target + "' has non-numeric value '" + v + "'");
        }
    }

    EncodingSchema schema;
    schema.target_column = target;
    for (const auto& col : raw.columns) {
        bool numeric = std::all_of(col.values.begin(), col.values.end(), is_numeric_string);
        if (numeric && !col.values.empty()) {
            schema.numeric_columns.push_back(col.name);
        } else if (!col.values.empty()) {
            std::set<std::string> cats(col.values.begin(), col.values.end());
            std::map<std::string, int> codes;
            int code = 0;
            for (const auto& cat : cats) codes[cat] = code++;  // std::set is sorted
            schema.ordinal_maps[col.name] = std::move(codes);
        } else {
            // Zero-row table: treat every column as numeric pass-through.
            schema.numeric_columns.push_back(col.name);
        }
    }
    return schema;
}

NumericTable encode(const RawTable& raw, const EncodingSchema& schema) {
    NumericTable out;
    std::vector<const RawTable::Column*> feature_cols;
    const RawTable::Column* target_col = raw.find_column(schema.target_column);
    if (target_col == nullptr) {
        throw SchemaError("target column '" + schema.target_column + "' not found");
    }
    for (const auto& col : raw.columns) {
        if (col.name == schema.target_column) continue;
        feature_cols.push_back(&col);
        out.feature_names.push_back(col.name);
    }

    out.features = Matrix(raw.row_count, feature_cols.size());
    for (std::size_t c = 0; c < feature_cols.size(); ++c) {
        const auto& col = *feature_cols[c];
        auto it = schema.ordinal_maps.find(col.name);
        for (std::size_t r = 0; r < raw.row_count; ++r) {
            double value;
            if (it != schema.ordinal_maps.end()) {
                auto code = it->second.find(col.values[r]);
                if (code == it->second.end()) {
                    throw EncodingError("unseen category '" + col.values[r] + "' in column '" +
                                        col.name + "'");
                }
                value = static_cast<double>(code->second);
            } else {
                value = parse_numeric(col.values[r], col.name);
            }
            out.features.at(r, c) = value;
        }
    }

    out.target.reserve(raw.row_count);
    for (const auto& v : target_col->values) {
        out.target.push_back(parse_numeric(v, schema.target_column));
    }
    return out;
}

NumericTable take_rows(const NumericTable& table, const std::vector<std::size_t>& rows) {
    NumericTable out;
    out.feature_names = table.feature_names;
    out.features = Matrix(rows.size(), table.n_features());
    out.target.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy_n(table.features.row(rows[i]), table.n_features(), out.features.row(i));
        out.target.push_back(table.target[rows[i]]);
    }
    return out;
}

NumericTable drop_features(const NumericTable& table, const std::vector<std::string>& names) {
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < table.feature_names.size(); ++c) {
        if (std::find(names.begin(), names.end(), table.feature_names[c]) == names.end()) {
            keep.push_back(c);
        }
    }
    if (table.feature_names.size() - keep.size() != names.size()) {
        throw ArgumentError("drop_features: a requested column does not exist");
    }
    NumericTable out;
    out.target = table.target;
    out.features = Matrix(table.n_rows(), keep.size());
    for (std::size_t c = 0; c < keep.size(); ++c) {
        out.feature_names.push_back(table.feature_names[keep[c]]);
        for (std::size_t r = 0; r < table.n_rows(); ++r) {
            out.features.at(r, c) = table.features.at(r, keep[c]);
        }
    }
    return out;
}

std::pair<NumericTable, NumericTable> split_train_test(const NumericTable& table,
                                                       double train_fraction,
                                                       std::uint64_t seed) {
    if (table.n_rows() < 2) throw ArgumentError("split requires at least 2 rows");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ArgumentError("train_fraction must lie in (0, 1)");
    }
    std::vector<std::size_t> order(table.n_rows());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    auto n_train = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(table.n_rows())));
    std::vector<std::size_t> train_rows(order.begin(), order.begin() + n_train);
    std::vector<std::size_t> test_rows(order.begin() + n_train, order.end());
    return {take_rows(table, train_rows), take_rows(table, test_rows)};
}

Scaler fit_minmax(const NumericTable& train) {
    if (train.n_rows() == 0) throw ArgumentError("cannot fit scaler on empty table");
    Scaler scaler;
    scaler.ranges.resize(train.n_features());
    for (std::size_t c = 0; c < train.n_features(); ++c) {
        double lo = train.features.at(0, c);
        double hi = lo;
        for (std::size_t r = 1; r < train.n_rows(); ++r) {
            lo = std::min(lo, train.features.at(r, c));
            hi = std::max(hi, train.features.at(r, c));
        }
        scaler.ranges[c] = {lo, hi};
    }
    return scaler;
}

NumericTable apply_minmax(const Scaler& scaler, const NumericTable& table) {
    if (scaler.ranges.size() != table.n_features()) {
        throw ShapeError("scaler has " + std::to_string(scaler.ranges.size()) +
                         " features, table has " + std::to_string(table.n_features()));
    }
    NumericTable out = table;
    for (std::size_t c = 0; c < table.n_features(); ++c) {
        auto [lo, hi] = scaler.ranges[c];
        double span = hi - lo;
        for (std::size_t r = 0; r < table.n_rows(); ++r) {
            out.features.at(r, c) = span == 0.0 ? 0.0 : (table.features.at(r, c) - lo) / span;
        }
    }
    return out;
}

}  // namespace stuperf
