#include "stuperf/transfer_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "stuperf/errors.hpp"
#include "stuperf/rng.hpp"

namespace stuperf {

std::string ExperimentPlan::fingerprint() const {
    std::ostringstream os;
    os << "dataset=" << dataset_path << ";target=" << target_column
       << ";drop_g1_g2=" << drop_g1_g2 << ";k_max=" << k_max << ";restarts=" << restarts
       << ";train_fraction=" << train_fraction << ";pretrain_epochs=" << pretrain_epochs
       << ";finetune_epochs=" << finetune_epochs << ";batch_size=" << batch_size
       << ";learning_rate=" << learning_rate << ";widths=";
    for (auto w : widths) os << w << ",";
    os << ";frozen_counts=";
    for (auto f : frozen_counts) os << f << ",";
    return os.str();
}

namespace {

std::string dataset_id_of(const ExperimentPlan& plan) {
    if (!plan.dataset_id.empty()) return plan.dataset_id;
    return std::filesystem::path(plan.dataset_path).stem().string();
}

TrainConfig make_config(const ExperimentPlan& plan, std::size_t epochs, std::uint64_t seed) {
    TrainConfig config;
    config.epochs = epochs;
    config.batch_size = plan.batch_size;
    config.learning_rate = plan.learning_rate;
    config.seed = seed;
    return config;
}

}  // namespace

PreparedData prepare_dataset(const ExperimentPlan& plan, std::uint64_t seed) {
    RawTable raw = parse_table_file(plan.dataset_path);

    PreparedData out;
    out.schema = build_encoding_schema(raw, plan.target_column);
    out.encoded = encode(raw, out.schema);
    if (plan.drop_g1_g2) {
        out.encoded = drop_features(out.encoded, {"G1", "G2"});
    }

    // Clustering uses a full-dataset scaler; modeling later refits on
    // training rows only.
    Scaler cluster_scaler = fit_minmax(out.encoded);
    NumericTable scaled = apply_minmax(cluster_scaler, out.encoded);

    ElbowResult elbow = elbow_select(scaled.features, plan.k_max, mix_seed(seed, 7), plan.restarts);
    out.chosen_k = elbow.k;
    out.curve = elbow.curve;

    const ClusterModel& model = elbow.models[elbow.k - 1];
    std::vector<std::size_t> labels = assign(model, scaled.features);

    std::vector<std::size_t> sizes(elbow.k, 0);
    for (auto l : labels) ++sizes[l];

    // Relabel so the largest cluster is 0 (source), next largest 1 (target).
    std::vector<std::size_t> order(elbow.k);
    for (std::size_t i = 0; i < elbow.k; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sizes[a] > sizes[b]; });
    std::vector<std::size_t> relabel(elbow.k);
    for (std::size_t i = 0; i < elbow.k; ++i) relabel[order[i]] = i;

    out.labels.resize(labels.size());
    out.cluster_sizes.assign(elbow.k, 0);
    std::vector<std::size_t> rows0, rows1;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        std::size_t l = relabel[labels[r]];
        out.labels[r] = l;
        ++out.cluster_sizes[l];
        if (l == 0) rows0.push_back(r);
        if (l == 1) rows1.push_back(r);
    }
    if (rows1.empty()) {
        throw NumericError("clustering produced a single nonempty cluster; no target domain");
    }
    out.cluster0 = take_rows(out.encoded, rows0);
    out.cluster1 = take_rows(out.encoded, rows1);
    return out;
}

SourceRun run_source_training(const ExperimentPlan& plan, const PreparedData& data,
                              std::uint64_t seed) {
    auto [train_raw, test_raw] =
        split_train_test(data.cluster0, plan.train_fraction, mix_seed(seed, 11));

    SourceRun run;
    run.modeling_scaler = fit_minmax(train_raw);
    NumericTable train_scaled = apply_minmax(run.modeling_scaler, train_raw);
    NumericTable test_scaled = apply_minmax(run.modeling_scaler, test_raw);

    Mlp initial = init_mlp(train_scaled.n_features(), plan.widths, mix_seed(seed, 13));
    auto [trained, history] =
        train(initial, train_scaled, make_config(plan, plan.pretrain_epochs, mix_seed(seed, 17)));
    run.model = std::move(trained);
    run.pretrain_history = std::move(history);

    const std::string dataset = dataset_id_of(plan);
    run.source_test_pred = forward(run.model, test_scaled.features);
    run.source_test_y = test_scaled.target;
    run.source_test = evaluate(run.source_test_y, run.source_test_pred,
                               {dataset, "cluster0", "test", 0, seed});

    // Direct cross-cluster evaluation on the cluster1 test split, reusing
    // the source-fitted scaler so the rows match the fine-tuned runs.
    auto [c1_train, c1_test] =
        split_train_test(data.cluster1, plan.train_fraction, mix_seed(seed, 19));
    NumericTable c1_test_scaled = apply_minmax(run.modeling_scaler, c1_test);
    run.target_direct_pred = forward(run.model, c1_test_scaled.features);
    run.target_direct_y = c1_test_scaled.target;
    run.target_direct = evaluate(run.target_direct_y, run.target_direct_pred,
                                 {dataset, "cluster1", "test", 0, seed});
    return run;
}

TransferRun run_transfer(const Mlp& pretrained, const Scaler& scaler,
                         const NumericTable& cluster1, std::size_t n_frozen,
                         const ExperimentPlan& plan, std::uint64_t seed) {
    if (n_frozen < 1 || n_frozen >= pretrained.depth()) {
        throw ArgumentError("run_transfer: n_frozen must be in [1, depth)");
    }

    auto [c1_train, c1_test] =
        split_train_test(cluster1, plan.train_fraction, mix_seed(seed, 19));
    NumericTable train_scaled = apply_minmax(scaler, c1_train);
    NumericTable test_scaled = apply_minmax(scaler, c1_test);

    Mlp frozen = freeze_layers(pretrained, n_frozen);
    auto [tuned, history] =
        train(frozen, train_scaled,
              make_config(plan, plan.finetune_epochs, mix_seed(seed, 23 + n_frozen)));

    TransferRun run;
    run.n_frozen = n_frozen;
    run.model = std::move(tuned);
    run.history = std::move(history);
    run.pred = forward(run.model, test_scaled.features);
    run.y = test_scaled.target;
    run.report = evaluate(run.y, run.pred,
                          {dataset_id_of(plan), "cluster1", "test",
                           static_cast<int>(n_frozen), seed});
    return run;
}

ExperimentResult frozen_layer_sweep(const ExperimentPlan& plan, std::uint64_t seed) {
    ExperimentResult result;
    result.plan_fingerprint = plan.fingerprint();
    result.dataset_id = dataset_id_of(plan);
    result.seed = seed;

    result.data = prepare_dataset(plan, seed);
    try {
        result.source = run_source_training(plan, result.data, seed);
    } catch (const Error& e) {
        result.failed_stages["source"] = e.what();
        return result;
    }

    for (std::size_t n_frozen : plan.frozen_counts) {
        try {
            result.transfers.push_back(run_transfer(result.source->model,
                                                    result.source->modeling_scaler,
                                                    result.data.cluster1, n_frozen, plan, seed));
        } catch (const Error& e) {
            result.failed_stages["transfer_f" + std::to_string(n_frozen)] = e.what();
        }
    }
    return result;
}

namespace {

struct Accumulator {
    std::vector<double> rmse, mae, r2;

    void add(const EvalReport& r) {
        rmse.push_back(r.rmse);
        mae.push_back(r.mae);
        r2.push_back(r.r2);
    }
};

std::pair<double, double> mean_std(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    // Population stddev; a single seed reports 0 spread.
    var /= static_cast<double>(xs.size());
    return {mean, std::sqrt(var)};
}

}  // namespace

std::vector<SummaryRow> aggregate_seeds(const std::vector<ExperimentResult>& results) {
    if (results.empty()) throw ArgumentError("aggregate_seeds: no results");
    for (const auto& r : results) {
        if (r.plan_fingerprint != results.front().plan_fingerprint) {
            throw ArgumentError("aggregate_seeds: results come from different plans");
        }
    }

    std::map<std::pair<std::string, int>, Accumulator> acc;
    for (const auto& r : results) {
        if (r.source) {
            acc[{"source_test", -1}].add(r.source->source_test);
            acc[{"target_direct", -1}].add(r.source->target_direct);
        }
        for (const auto& t : r.transfers) {
            acc[{"transfer_f" + std::to_string(t.n_frozen), static_cast<int>(t.n_frozen)}].add(
                t.report);
        }
    }

    std::vector<SummaryRow> rows;
    for (const auto& [key, a] : acc) {
        SummaryRow row;
        row.stage = key.first;
        row.frozen_count = key.second;
        row.n_seeds = a.rmse.size();
        std::tie(row.rmse_mean, row.rmse_std) = mean_std(a.rmse);
        std::tie(row.mae_mean, row.mae_std) = mean_std(a.mae);
        std::tie(row.r2_mean, row.r2_std) = mean_std(a.r2);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace stuperf
