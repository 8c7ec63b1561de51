#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stuperf/data_ingest.hpp"
#include "stuperf/matrix.hpp"

namespace stuperf {

enum class Activation { Relu, Linear };

struct Layer {
    Matrix weights;  // out x in
    std::vector<double> bias;
    Activation activation = Activation::Relu;
};

/// Dense feed-forward regressor. Hidden layers are relu, the final layer
/// linear, and each layer can be frozen during training.
struct Mlp {
    std::vector<Layer> layers;
    std::vector<bool> freeze_mask;
    std::size_t input_dim = 0;

    std::size_t depth() const { return layers.size(); }
    std::vector<std::size_t> widths() const;
    std::size_t parameter_count() const;
};

/// Gradient (or moment) buffers shaped like an Mlp's parameters.
struct MlpGrads {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> bias;
};

struct AdamState {
    MlpGrads m;
    MlpGrads v;
    std::uint64_t t = 0;
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainConfig {
    std::size_t epochs = 500;
    std::size_t batch_size = 10;
    double learning_rate = 0.001;
    std::uint64_t seed = 0;
    bool shuffle_each_epoch = true;
};

struct LossHistory {
    std::vector<double> epoch_mae;
    std::size_t best_epoch = 0;
};

inline const std::vector<std::size_t> kDefaultWidths = {32, 16, 8, 4, 2, 1};

/// He-uniform weights (+-sqrt(6/fan_in)), zero biases, nothing frozen.
Mlp init_mlp(std::size_t input_dim, const std::vector<std::size_t>& widths, std::uint64_t seed);

std::vector<double> forward(const Mlp& mlp, const Matrix& batch);
double forward_one(const Mlp& mlp, const std::vector<double>& x);

double mae_loss(const std::vector<double>& preds, const std::vector<double>& targets);

/// Exact gradients of the batch MAE. Subgradients at MAE and relu kinks
/// are taken as 0.
MlpGrads backward(const Mlp& mlp, const Matrix& batch_x, const std::vector<double>& batch_y);

AdamState make_adam_state(const Mlp& mlp, double learning_rate);

/// One Adam update with bias correction. Frozen layers keep both their
/// parameters and their moment buffers untouched.
void adam_step(Mlp& mlp, const MlpGrads& grads, AdamState& state);

/// Minibatch training; returns the parameters of the lowest-loss epoch.
std::pair<Mlp, LossHistory> train(const Mlp& mlp, const NumericTable& data,
                                  const TrainConfig& config);

/// Freeze layers 0..n_frozen-1. The output layer must stay trainable.
Mlp freeze_layers(const Mlp& mlp, std::size_t n_frozen);

/// Versioned model file: widths, activations, parameters, freeze mask,
/// encoding schema, scaler, seed, config fingerprint.
void save_model(const Mlp& mlp, const EncodingSchema& schema, const Scaler& scaler,
                std::uint64_t seed, const std::string& config_fingerprint,
                const std::string& path);

struct LoadedModel {
    Mlp mlp;
    EncodingSchema schema;
    Scaler scaler;
    std::uint64_t seed = 0;
    std::string config_fingerprint;
};

LoadedModel load_model(const std::string& path);

}  // namespace stuperf
