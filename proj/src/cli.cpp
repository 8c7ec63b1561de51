#include "stuperf/cli.hpp"

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "stuperf/errors.hpp"
#include "stuperf/fs.hpp"
#include "stuperf/pca.hpp"
#include "stuperf/report.hpp"
#include "stuperf/transfer_pipeline.hpp"

namespace stuperf {

namespace {

std::string seed_tag(std::uint64_t seed) { return "seed" + std::to_string(seed); }

/// Encode a CSV and return the clustering-scaled feature matrix plus schema.
std::pair<NumericTable, EncodingSchema> load_scaled(const std::string& input,
                                                    const std::string& target) {
    RawTable raw = parse_table_file(input);
    EncodingSchema schema = build_encoding_schema(raw, target);
    NumericTable encoded = encode(raw, schema);
    Scaler scaler = fit_minmax(encoded);
    return {apply_minmax(scaler, encoded), schema};
}

void emit_seed_artifacts(const ExperimentResult& result, const RunConfig& config) {
    const std::string tag = seed_tag(result.seed);
    const std::string& dir = config.output_dir;

    render_wcss_curve(result.data.curve, dir + "/curves/wcss_" + tag + ".csv");

    if (config.emit_loss_curves && result.source) {
        render_loss_curve(result.source->pretrain_history,
                          dir + "/curves/pretrain_" + tag + ".csv");
        if (config.wants("svg")) {
            render_loss_curve_svg(result.source->pretrain_history,
                                  dir + "/curves/pretrain_" + tag + ".svg");
        }
    }
    if (result.source) {
        render_scatter(result.source->source_test_y, result.source->source_test_pred,
                       dir + "/scatter/source_test_" + tag + ".csv");
        render_scatter(result.source->target_direct_y, result.source->target_direct_pred,
                       dir + "/scatter/target_direct_" + tag + ".csv");
        if (config.wants("svg")) {
            render_scatter_svg(result.source->source_test_y, result.source->source_test_pred,
                               dir + "/scatter/source_test_" + tag + ".svg");
            render_scatter_svg(result.source->target_direct_y, result.source->target_direct_pred,
                               dir + "/scatter/target_direct_" + tag + ".svg");
        }
        save_model(result.source->model, result.data.schema, result.source->modeling_scaler,
                   result.seed, result.plan_fingerprint,
                   dir + "/model/pretrained_" + tag + ".json");
    }

    for (const auto& t : result.transfers) {
        const std::string ftag = "transfer_f" + std::to_string(t.n_frozen) + "_" + tag;
        if (config.emit_loss_curves) {
            render_loss_curve(t.history, dir + "/curves/" + ftag + ".csv");
            if (config.wants("svg")) {
                render_loss_curve_svg(t.history, dir + "/curves/" + ftag + ".svg");
            }
        }
        render_scatter(t.y, t.pred, dir + "/scatter/" + ftag + ".csv");
        if (config.wants("svg")) {
            render_scatter_svg(t.y, t.pred, dir + "/scatter/" + ftag + ".svg");
        }
        save_model(t.model, result.data.schema, result.source->modeling_scaler, result.seed,
                   result.plan_fingerprint, dir + "/model/" + ftag + ".json");
    }

    if (config.emit_pca_scatter) {
        Scaler scaler = fit_minmax(result.data.encoded);
        NumericTable scaled = apply_minmax(scaler, result.data.encoded);
        PcaModel pca = fit_pca(scaled.features);
        Matrix coords = project(pca, scaled.features);
        export_scatter(coords, result.data.labels, dir + "/scatter/pca_" + tag + ".csv");
        if (config.wants("svg")) {
            render_pca_scatter_svg(coords, result.data.labels,
                                   dir + "/scatter/pca_" + tag + ".svg");
        }
    }
}

void print_report(const std::string& label, const EvalReport& r) {
    std::cout << label << ": rmse=" << r.rmse << " mae=" << r.mae << " r2=" << r.r2
              << " n=" << r.n << '\n';
}

int run_sweep(const std::string& config_path) {
    RunConfig config = load_run_config(config_path);
    std::vector<ExperimentResult> results;
    for (std::uint64_t seed : config.plan.seeds) {
        std::cout << "running sweep, seed " << seed << "...\n";
        results.push_back(frozen_layer_sweep(config.plan, seed));
        const auto& r = results.back();
        std::cout << "  k=" << r.data.chosen_k << ", cluster sizes:";
        for (auto s : r.data.cluster_sizes) std::cout << ' ' << s;
        std::cout << '\n';
        if (r.source) {
            print_report("  source_test", r.source->source_test);
            print_report("  target_direct", r.source->target_direct);
        }
        for (const auto& t : r.transfers) {
            print_report("  transfer_f" + std::to_string(t.n_frozen), t.report);
        }
        for (const auto& [stage, err] : r.failed_stages) {
            std::cout << "  FAILED " << stage << ": " << err << '\n';
        }
        emit_seed_artifacts(r, config);
    }

    render_tables(results, config);
    write_file_atomic(config.output_dir + "/results.json", results_to_json(results));
    std::cout << "report written to " << config.output_dir << '\n';
    return 0;
}

int run_pretrain(const std::string& config_path) {
    RunConfig config = load_run_config(config_path);
    std::uint64_t seed = config.plan.seeds.front();
    PreparedData data = prepare_dataset(config.plan, seed);
    SourceRun run = run_source_training(config.plan, data, seed);
    print_report("source_test", run.source_test);
    print_report("target_direct", run.target_direct);
    const std::string path =
        config.output_dir + "/model/pretrained_" + seed_tag(seed) + ".json";
    save_model(run.model, data.schema, run.modeling_scaler, seed, config.plan.fingerprint(), path);
    if (config.emit_loss_curves) {
        render_loss_curve(run.pretrain_history,
                          config.output_dir + "/curves/pretrain_" + seed_tag(seed) + ".csv");
    }
    std::cout << "model written to " << path << '\n';
    return 0;
}

int run_transfer_cmd(const std::string& config_path, const std::string& model_path,
                     std::size_t n_frozen, std::uint64_t seed_override, bool has_seed) {
    RunConfig config = load_run_config(config_path);
    std::uint64_t seed = has_seed ? seed_override : config.plan.seeds.front();
    LoadedModel loaded = load_model(model_path);
    PreparedData data = prepare_dataset(config.plan, seed);
    TransferRun run = run_transfer(loaded.mlp, loaded.scaler, data.cluster1, n_frozen,
                                   config.plan, seed);
    print_report("transfer_f" + std::to_string(n_frozen), run.report);
    const std::string path = config.output_dir + "/model/transfer_f" +
                             std::to_string(n_frozen) + "_" + seed_tag(seed) + ".json";
    save_model(run.model, data.schema, loaded.scaler, seed, config.plan.fingerprint(), path);
    std::cout << "model written to " << path << '\n';
    return 0;
}

int run_cluster(const std::string& input, const std::string& target, const std::string& out_dir,
                std::uint64_t seed, std::size_t k_max) {
    auto [scaled, schema] = load_scaled(input, target);
    ElbowResult elbow = elbow_select(scaled.features, k_max, seed);
    render_wcss_curve(elbow.curve, out_dir + "/wcss.csv");

    auto labels = assign(elbow.models[elbow.k - 1], scaled.features);
    std::ostringstream os;
    os << "row,cluster\n";
    for (std::size_t r = 0; r < labels.size(); ++r) os << r << ',' << labels[r] << '\n';
    write_file_atomic(out_dir + "/labels.csv", os.str());

    std::cout << "chosen k=" << elbow.k << ", wcss curve in " << out_dir << "/wcss.csv\n";
    return 0;
}

int run_pca(const std::string& input, const std::string& target, const std::string& out_path,
            std::uint64_t seed, std::size_t k_max) {
    auto [scaled, schema] = load_scaled(input, target);
    ElbowResult elbow = elbow_select(scaled.features, k_max, seed);
    auto labels = assign(elbow.models[elbow.k - 1], scaled.features);
    PcaModel pca = fit_pca(scaled.features);
    export_scatter(project(pca, scaled.features), labels, out_path);
    std::cout << "pca scatter written to " << out_path << " (k=" << elbow.k << ")\n";
    return 0;
}

int run_report(const std::string& input, const std::string& out_dir,
               const std::vector<std::string>& formats) {
    RunConfig config;
    config.output_dir = out_dir;
    config.formats = formats;
    render_tables_from_json(read_file(input), config);
    std::cout << "tables written to " << out_dir << "/tables\n";
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Cluster-shift transfer learning for student grade regression"};
    app.require_subcommand(1);

    std::string config_path, input, out = "out", model_path, target = "G3";
    std::uint64_t seed = 1;
    std::size_t k_max = 10, n_frozen = 1;
    std::vector<std::string> formats = {"csv", "md"};

    auto* sweep = app.add_subcommand("sweep", "Full experiment: pretrain + frozen-layer sweep");
    sweep->add_option("--config", config_path, "experiment config file")->required();

    auto* pretrain = app.add_subcommand("pretrain", "Train the source model only");
    pretrain->add_option("--config", config_path, "experiment config file")->required();

    auto* transfer = app.add_subcommand("transfer", "Fine-tune a saved model on the target cluster");
    transfer->add_option("--config", config_path, "experiment config file")->required();
    transfer->add_option("--model", model_path, "pretrained model file")->required();
    transfer->add_option("--frozen", n_frozen, "layers to freeze")->required();
    auto* seed_opt = transfer->add_option("--seed", seed, "run seed");

    auto* cluster = app.add_subcommand("cluster", "Cluster a dataset and emit the WCSS curve");
    cluster->add_option("--input", input, "input CSV")->required();
    cluster->add_option("--out", out, "output directory");
    cluster->add_option("--seed", seed, "clustering seed");
    cluster->add_option("--kmax", k_max, "largest k for the elbow curve");
    cluster->add_option("--target", target, "target column name");

    auto* pca = app.add_subcommand("pca", "Project a dataset to two components");
    pca->add_option("--input", input, "input CSV")->required();
    std::string pca_out = "scatter.csv";
    pca->add_option("--out", pca_out, "output CSV path");
    pca->add_option("--seed", seed, "clustering seed");
    pca->add_option("--kmax", k_max, "largest k for the elbow curve");
    pca->add_option("--target", target, "target column name");

    auto* report = app.add_subcommand("report", "Re-render tables from a results file");
    report->add_option("--input", input, "results.json from a sweep")->required();
    report->add_option("--out", out, "output directory");
    report->add_option("--format", formats, "csv, md or svg");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (sweep->parsed()) return run_sweep(config_path);
        if (pretrain->parsed()) return run_pretrain(config_path);
        if (transfer->parsed()) {
            return run_transfer_cmd(config_path, model_path, n_frozen, seed, !seed_opt->empty());
        }
        if (cluster->parsed()) return run_cluster(input, target, out, seed, k_max);
        if (pca->parsed()) return run_pca(input, target, pca_out, seed, k_max);
        if (report->parsed()) return run_report(input, out, formats);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace stuperf
