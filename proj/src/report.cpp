#include "stuperf/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "stuperf/errors.hpp"
#include "stuperf/fs.hpp"

namespace stuperf {

bool RunConfig::wants(const std::string& format) const {
    return std::find(formats.begin(), formats.end(), format) != formats.end();
}

namespace {

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv_list(const std::string& s) {
    std::vector<std::string> parts;
    std::istringstream stream(s);
    std::string part;
    while (std::getline(stream, part, ',')) {
        part = trim(part);
        if (!part.empty()) parts.push_back(part);
    }
    return parts;
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("config field '" + key + "': expected boolean, got '" + value + "'");
}

template <typename T>
T parse_number(const std::string& value, const std::string& key) {
    std::istringstream stream(value);
    T out;
    stream >> out;
    if (stream.fail() || !stream.eof()) {
        throw ConfigError("config field '" + key + "': invalid number '" + value + "'");
    }
    return out;
}

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string format_fixed2(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
}

struct ReportRow {
    std::string stage;
    std::string cluster;
    std::uint64_t seed = 0;
    int frozen = 0;
    std::size_t n = 0;
    double rmse = 0, mae = 0, r2 = 0;
};

std::vector<ReportRow> collect_rows(const std::vector<ExperimentResult>& results) {
    std::vector<ReportRow> rows;
    auto push = [&](const std::string& stage, const EvalReport& r) {
        rows.push_back({stage, r.provenance.cluster_id, r.provenance.seed,
                        r.provenance.frozen_count, r.n, r.rmse, r.mae, r.r2});
    };
    for (const auto& result : results) {
        if (result.source) {
            push("source_test", result.source->source_test);
            push("target_direct", result.source->target_direct);
        }
        for (const auto& t : result.transfers) {
            push("transfer", t.report);
        }
    }
    return rows;
}

std::string rows_to_csv(const std::vector<ReportRow>& rows) {
    std::ostringstream os;
    os << "stage,cluster,seed,frozen,n,rmse,mae,r2\n";
    for (const auto& r : rows) {
        os << r.stage << ',' << r.cluster << ',' << r.seed << ',' << r.frozen << ',' << r.n << ','
           << format_double(r.rmse) << ',' << format_double(r.mae) << ','
           << format_double(r.r2) << '\n';
    }
    return os.str();
}

std::string rows_to_markdown(const std::string& title, const std::vector<ReportRow>& rows) {
    std::ostringstream os;
    os << "# " << title << "\n\n";
    os << "| stage | cluster | seed | frozen | n | RMSE | MAE | R2 |\n";
    os << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows) {
        os << "| " << r.stage << " | " << r.cluster << " | " << r.seed << " | " << r.frozen
           << " | " << r.n << " | " << format_fixed2(r.rmse) << " | " << format_fixed2(r.mae)
           << " | " << format_fixed2(r.r2) << " |\n";
    }
    return os.str();
}

std::string summary_to_csv(const std::vector<SummaryRow>& summary) {
    std::ostringstream os;
    os << "stage,frozen,n_seeds,rmse_mean,rmse_std,mae_mean,mae_std,r2_mean,r2_std\n";
    for (const auto& s : summary) {
        os << s.stage << ',' << s.frozen_count << ',' << s.n_seeds << ','
           << format_double(s.rmse_mean) << ',' << format_double(s.rmse_std) << ','
           << format_double(s.mae_mean) << ',' << format_double(s.mae_std) << ','
           << format_double(s.r2_mean) << ',' << format_double(s.r2_std) << '\n';
    }
    return os.str();
}

void render_row_tables(const std::vector<ReportRow>& rows, const RunConfig& config) {
    std::vector<ReportRow> no_transfer, transfer;
    for (const auto& r : rows) {
        (r.stage == "transfer" ? transfer : no_transfer).push_back(r);
    }

    const std::string dir = config.output_dir + "/tables";
    if (config.wants("csv")) {
        write_file_atomic(dir + "/no_transfer.csv", rows_to_csv(no_transfer));
    }
    if (config.wants("md")) {
        write_file_atomic(dir + "/no_transfer.md",
                          rows_to_markdown("Evaluation without transfer", no_transfer));
    }
    if (transfer.empty()) {
        write_file_atomic(dir + "/transfer_omitted.txt",
                          "no fine-tuning runs were requested (empty frozen_counts)\n");
        return;
    }
    if (config.wants("csv")) {
        write_file_atomic(dir + "/transfer.csv", rows_to_csv(transfer));
    }
    if (config.wants("md")) {
        write_file_atomic(dir + "/transfer.md",
                          rows_to_markdown("Evaluation with transfer", transfer));
    }
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    RunConfig config;
    std::istringstream stream(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));

        if (key == "dataset_path") {
            config.plan.dataset_path = value;
        } else if (key == "dataset_id") {
            config.plan.dataset_id = value;
        } else if (key == "target_column") {
            config.plan.target_column = value;
        } else if (key == "drop_g1_g2") {
            config.plan.drop_g1_g2 = parse_bool(value, key);
        } else if (key == "k_max") {
            config.plan.k_max = parse_number<std::size_t>(value, key);
        } else if (key == "restarts") {
            config.plan.restarts = parse_number<std::size_t>(value, key);
        } else if (key == "train_fraction") {
            config.plan.train_fraction = parse_number<double>(value, key);
        } else if (key == "seeds") {
            config.plan.seeds.clear();
            for (const auto& s : split_csv_list(value)) {
                config.plan.seeds.push_back(parse_number<std::uint64_t>(s, key));
            }
        } else if (key == "pretrain_epochs") {
            config.plan.pretrain_epochs = parse_number<std::size_t>(value, key);
        } else if (key == "finetune_epochs") {
            config.plan.finetune_epochs = parse_number<std::size_t>(value, key);
        } else if (key == "batch_size") {
            config.plan.batch_size = parse_number<std::size_t>(value, key);
        } else if (key == "learning_rate") {
            config.plan.learning_rate = parse_number<double>(value, key);
        } else if (key == "frozen_counts") {
            config.plan.frozen_counts.clear();
            for (const auto& s : split_csv_list(value)) {
                config.plan.frozen_counts.push_back(parse_number<std::size_t>(s, key));
            }
        } else if (key == "widths") {
            config.plan.widths.clear();
            for (const auto& s : split_csv_list(value)) {
                config.plan.widths.push_back(parse_number<std::size_t>(s, key));
            }
        } else if (key == "output_dir") {
            config.output_dir = value;
        } else if (key == "formats") {
            config.formats = split_csv_list(value);
            for (const auto& f : config.formats) {
                if (f != "csv" && f != "md" && f != "svg") {
                    throw ConfigError("config field 'formats': unknown format '" + f + "'");
                }
            }
        } else if (key == "emit_pca_scatter") {
            config.emit_pca_scatter = parse_bool(value, key);
        } else if (key == "emit_loss_curves") {
            config.emit_loss_curves = parse_bool(value, key);
        } else {
            throw ConfigError("unknown config field '" + key + "'");
        }
    }

    if (config.plan.dataset_path.empty()) throw ConfigError("config field 'dataset_path' missing");
    if (config.plan.seeds.empty()) throw ConfigError("config field 'seeds' must be nonempty");
    if (config.formats.empty()) throw ConfigError("config field 'formats' must be nonempty");
    for (std::size_t f : config.plan.frozen_counts) {
        if (f >= config.plan.widths.size()) {
            throw ConfigError("config field 'frozen_counts': " + std::to_string(f) +
                              " >= network depth");
        }
    }
    return config;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_file(path)); }

void render_tables(const std::vector<ExperimentResult>& results, const RunConfig& config) {
    render_row_tables(collect_rows(results), config);
    if (config.wants("csv") && !results.empty()) {
        write_file_atomic(config.output_dir + "/tables/summary.csv",
                          summary_to_csv(aggregate_seeds(results)));
    }
}

void render_loss_curve(const LossHistory& history, const std::string& path) {
    if (history.epoch_mae.empty()) throw ArgumentError("render_loss_curve: empty history");
    std::ostringstream os;
    os << "epoch,mae\n";
    for (std::size_t e = 0; e < history.epoch_mae.size(); ++e) {
        os << e << ',' << format_double(history.epoch_mae[e]) << '\n';
    }
    os << "# best_epoch=" << history.best_epoch << '\n';
    write_file_atomic(path, os.str());
}

void render_scatter(const std::vector<double>& y, const std::vector<double>& yhat,
                    const std::string& path) {
    if (y.size() != yhat.size()) throw ArgumentError("render_scatter: length mismatch");
    std::ostringstream os;
    os << "real,predicted\n";
    for (std::size_t i = 0; i < y.size(); ++i) {
        os << format_double(y[i]) << ',' << format_double(yhat[i]) << '\n';
    }
    write_file_atomic(path, os.str());
}

void render_wcss_curve(const WcssCurve& curve, const std::string& path) {
    std::ostringstream os;
    os << "k,wcss\n";
    for (std::size_t k = 1; k <= curve.k_max(); ++k) {
        os << k << ',' << format_double(curve.at_k(k)) << '\n';
    }
    write_file_atomic(path, os.str());
}

namespace {

constexpr int kSvgSize = 480;
constexpr int kSvgMargin = 40;

struct SvgFrame {
    double x_min, x_max, y_min, y_max;

    double px(double x) const {
        double span = x_max - x_min;
        if (span == 0.0) span = 1.0;
        return kSvgMargin + (x - x_min) / span * (kSvgSize - 2 * kSvgMargin);
    }
    double py(double y) const {
        double span = y_max - y_min;
        if (span == 0.0) span = 1.0;
        return kSvgSize - kSvgMargin - (y - y_min) / span * (kSvgSize - 2 * kSvgMargin);
    }
};

std::string svg_header() {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSvgSize << "\" height=\""
       << kSvgSize << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return os.str();
}

}  // namespace

void render_loss_curve_svg(const LossHistory& history, const std::string& path) {
    if (history.epoch_mae.empty()) throw ArgumentError("render_loss_curve_svg: empty history");
    double lo = *std::min_element(history.epoch_mae.begin(), history.epoch_mae.end());
    double hi = *std::max_element(history.epoch_mae.begin(), history.epoch_mae.end());
    SvgFrame frame{0.0, static_cast<double>(history.epoch_mae.size() - 1), lo, hi};

    std::ostringstream os;
    os << svg_header() << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    for (std::size_t e = 0; e < history.epoch_mae.size(); ++e) {
        os << frame.px(static_cast<double>(e)) << ',' << frame.py(history.epoch_mae[e]) << ' ';
    }
    os << "\"/>\n";
    os << "<circle cx=\"" << frame.px(static_cast<double>(history.best_epoch)) << "\" cy=\""
       << frame.py(history.epoch_mae[history.best_epoch])
       << "\" r=\"4\" fill=\"crimson\"/>\n</svg>\n";
    write_file_atomic(path, os.str());
}

void render_scatter_svg(const std::vector<double>& y, const std::vector<double>& yhat,
                        const std::string& path) {
    if (y.size() != yhat.size()) throw ArgumentError("render_scatter_svg: length mismatch");
    double lo = 0.0, hi = 1.0;
    if (!y.empty()) {
        lo = std::min(*std::min_element(y.begin(), y.end()),
                      *std::min_element(yhat.begin(), yhat.end()));
        hi = std::max(*std::max_element(y.begin(), y.end()),
                      *std::max_element(yhat.begin(), yhat.end()));
    }
    SvgFrame frame{lo, hi, lo, hi};

    std::ostringstream os;
    os << svg_header();
    os << "<line x1=\"" << frame.px(lo) << "\" y1=\"" << frame.py(lo) << "\" x2=\"" << frame.px(hi)
       << "\" y2=\"" << frame.py(hi) << "\" stroke=\"gray\" stroke-dasharray=\"4\"/>\n";
    for (std::size_t i = 0; i < y.size(); ++i) {
        os << "<circle cx=\"" << frame.px(y[i]) << "\" cy=\"" << frame.py(yhat[i])
           << "\" r=\"3\" fill=\"steelblue\" fill-opacity=\"0.6\"/>\n";
    }
    os << "</svg>\n";
    write_file_atomic(path, os.str());
}

void render_pca_scatter_svg(const Matrix& coords, const std::vector<std::size_t>& labels,
                            const std::string& path) {
    if (coords.rows != labels.size()) throw ArgumentError("render_pca_scatter_svg: length mismatch");
    static const char* kColors[] = {"steelblue", "darkorange", "seagreen", "crimson", "purple"};
    double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
    if (coords.rows > 0) {
        x_lo = x_hi = coords.at(0, 0);
        y_lo = y_hi = coords.at(0, 1);
        for (std::size_t r = 0; r < coords.rows; ++r) {
            x_lo = std::min(x_lo, coords.at(r, 0));
            x_hi = std::max(x_hi, coords.at(r, 0));
            y_lo = std::min(y_lo, coords.at(r, 1));
            y_hi = std::max(y_hi, coords.at(r, 1));
        }
    }
    SvgFrame frame{x_lo, x_hi, y_lo, y_hi};

    std::ostringstream os;
    os << svg_header();
    for (std::size_t r = 0; r < coords.rows; ++r) {
        os << "<circle cx=\"" << frame.px(coords.at(r, 0)) << "\" cy=\""
           << frame.py(coords.at(r, 1)) << "\" r=\"3\" fill=\"" << kColors[labels[r] % 5]
           << "\" fill-opacity=\"0.7\"/>\n";
    }
    os << "</svg>\n";
    write_file_atomic(path, os.str());
}

std::string results_to_json(const std::vector<ExperimentResult>& results) {
    nlohmann::json j;
    j["plan_fingerprint"] = results.empty() ? "" : results.front().plan_fingerprint;
    j["dataset_id"] = results.empty() ? "" : results.front().dataset_id;

    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : collect_rows(results)) {
        rows.push_back({{"stage", row.stage},
                        {"cluster", row.cluster},
                        {"seed", row.seed},
                        {"frozen", row.frozen},
                        {"n", row.n},
                        {"rmse", row.rmse},
                        {"mae", row.mae},
                        {"r2", row.r2}});
    }
    j["rows"] = std::move(rows);

    nlohmann::json seeds = nlohmann::json::array();
    for (const auto& result : results) {
        nlohmann::json s;
        s["seed"] = result.seed;
        s["chosen_k"] = result.data.chosen_k;
        s["cluster_sizes"] = result.data.cluster_sizes;
        s["wcss_curve"] = result.data.curve.values;
        s["failed_stages"] = result.failed_stages;
        seeds.push_back(std::move(s));
    }
    j["seeds"] = std::move(seeds);
    return j.dump(2) + "\n";
}

void render_tables_from_json(const std::string& json_text, const RunConfig& config) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("corrupt results file: ") + e.what());
    }
    std::vector<ReportRow> rows;
    try {
        for (const auto& r : j.at("rows")) {
            rows.push_back({r.at("stage").get<std::string>(), r.at("cluster").get<std::string>(),
                            r.at("seed").get<std::uint64_t>(), r.at("frozen").get<int>(),
                            r.at("n").get<std::size_t>(), r.at("rmse").get<double>(),
                            r.at("mae").get<double>(), r.at("r2").get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed results file: ") + e.what());
    }
    render_row_tables(rows, config);
}

}  // namespace stuperf
