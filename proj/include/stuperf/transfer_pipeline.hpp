#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stuperf/clustering.hpp"
#include "stuperf/data_ingest.hpp"
#include "stuperf/metrics.hpp"
#include "stuperf/neural_net.hpp"

namespace stuperf {

struct ExperimentPlan {
    std::string dataset_path;
    std::string dataset_id;  // defaults to the file stem
    std::string target_column = "G3";
    bool drop_g1_g2 = false;
    std::size_t k_max = 10;
    std::size_t restarts = 10;
    double train_fraction = 0.7;
    std::vector<std::uint64_t> seeds = {1};
    std::size_t pretrain_epochs = 500;
    std::size_t finetune_epochs = 100;
    std::size_t batch_size = 10;
    double learning_rate = 0.001;
    std::vector<std::size_t> frozen_counts = {1, 2, 3};
    std::vector<std::size_t> widths = kDefaultWidths;

    std::string fingerprint() const;
};

/// Dataset after encoding, clustering and source/target designation.
/// cluster0 is the larger cluster (the source domain).
struct PreparedData {
    EncodingSchema schema;
    NumericTable encoded;  // full dataset, unscaled
    std::size_t chosen_k = 0;
    WcssCurve curve;
    std::vector<std::size_t> labels;        // cluster0 -> 0, cluster1 -> 1
    std::vector<std::size_t> cluster_sizes; // indexed by relabeled id
    NumericTable cluster0;
    NumericTable cluster1;
};

struct SourceRun {
    Mlp model;  // pretrained on cluster0-train
    Scaler modeling_scaler;
    EvalReport source_test;
    EvalReport target_direct;
    LossHistory pretrain_history;
    std::vector<double> source_test_y, source_test_pred;
    std::vector<double> target_direct_y, target_direct_pred;
};

struct TransferRun {
    std::size_t n_frozen = 0;
    Mlp model;
    EvalReport report;
    LossHistory history;
    std::vector<double> y, pred;
};

struct ExperimentResult {
    std::string plan_fingerprint;
    std::string dataset_id;
    std::uint64_t seed = 0;
    PreparedData data;
    std::optional<SourceRun> source;
    std::vector<TransferRun> transfers;
    std::map<std::string, std::string> failed_stages;  // stage -> error
};

/// Mean/stddev of each metric per stage across seeds.
struct SummaryRow {
    std::string stage;  // "source_test", "target_direct", "transfer_f<N>"
    int frozen_count = -1;
    std::size_t n_seeds = 0;
    double rmse_mean = 0, rmse_std = 0;
    double mae_mean = 0, mae_std = 0;
    double r2_mean = 0, r2_std = 0;
};

/// Encode, scale for clustering, pick k by elbow, split clusters.
PreparedData prepare_dataset(const ExperimentPlan& plan, std::uint64_t seed);

/// Pretrain on cluster0-train, evaluate on cluster0-test and on the
/// cluster1 test split with the source-fitted scaler (no refit).
SourceRun run_source_training(const ExperimentPlan& plan, const PreparedData& data,
                              std::uint64_t seed);

/// Fine-tune a pretrained model on the cluster1 train split with the first
/// n_frozen layers frozen and a fresh optimizer state.
TransferRun run_transfer(const Mlp& pretrained, const Scaler& scaler,
                         const NumericTable& cluster1, std::size_t n_frozen,
                         const ExperimentPlan& plan, std::uint64_t seed);

/// Full per-seed experiment: one pretraining run plus one fine-tuning run
/// per frozen count, all from the same pretrained weights.
ExperimentResult frozen_layer_sweep(const ExperimentPlan& plan, std::uint64_t seed);

std::vector<SummaryRow> aggregate_seeds(const std::vector<ExperimentResult>& results);

}  // namespace stuperf
