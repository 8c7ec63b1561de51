#include "stuperf/neural_net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "stuperf/errors.hpp"
#include "stuperf/fs.hpp"
#include "stuperf/metrics.hpp"
#include "stuperf/rng.hpp"

namespace stuperf {

std::vector<std::size_t> Mlp::widths() const {
    std::vector<std::size_t> w;
    w.reserve(layers.size());
    for (const auto& layer : layers) w.push_back(layer.weights.rows);
    return w;
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.weights.data.size() + layer.bias.size();
    return n;
}

Mlp init_mlp(std::size_t input_dim, const std::vector<std::size_t>& widths, std::uint64_t seed) {
    if (input_dim == 0) throw ArgumentError("init_mlp: input_dim must be >= 1");
    if (widths.empty() || widths.back() != 1) {
        throw ArgumentError("init_mlp: widths must be nonempty and end with 1");
    }
    for (std::size_t w : widths) {
        if (w == 0) throw ArgumentError("init_mlp: zero-width layer");
    }

    Mlp mlp;
    mlp.input_dim = input_dim;
    Rng rng(seed);
    std::size_t fan_in = input_dim;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        Layer layer;
        layer.weights = Matrix(widths[i], fan_in);
        double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (auto& w : layer.weights.data) w = rng.uniform(-limit, limit);
        layer.bias.assign(widths[i], 0.0);
        layer.activation = (i + 1 == widths.size()) ? Activation::Linear : Activation::Relu;
        mlp.layers.push_back(std::move(layer));
        fan_in = widths[i];
    }
    mlp.freeze_mask.assign(widths.size(), false);
    return mlp;
}

namespace {

/// Per-layer post-activation values for a batch; index 0 is the input.
std::vector<Matrix> forward_pass(const Mlp& mlp, const Matrix& batch) {
    if (batch.cols != mlp.input_dim) {
        throw ShapeError("forward: input width " + std::to_string(batch.cols) + " != " +
                         std::to_string(mlp.input_dim));
    }
    std::vector<Matrix> activations;
    activations.reserve(mlp.layers.size() + 1);
    activations.push_back(batch);
    for (const auto& layer : mlp.layers) {
        const Matrix& prev = activations.back();
        Matrix out(prev.rows, layer.weights.rows);
        for (std::size_t r = 0; r < prev.rows; ++r) {
            const double* in = prev.row(r);
            for (std::size_t o = 0; o < layer.weights.rows; ++o) {
                const double* w = layer.weights.row(o);
                double z = layer.bias[o];
                for (std::size_t i = 0; i < layer.weights.cols; ++i) z += w[i] * in[i];
                out.at(r, o) = layer.activation == Activation::Relu ? std::max(0.0, z) : z;
            }
        }
        activations.push_back(std::move(out));
    }
    return activations;
}

double sign_or_zero(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

std::vector<double> forward(const Mlp& mlp, const Matrix& batch) {
    auto activations = forward_pass(mlp, batch);
    const Matrix& out = activations.back();
    if (out.cols != 1) throw ShapeError("forward: output layer width must be 1");
    std::vector<double> preds(out.rows);
    for (std::size_t r = 0; r < out.rows; ++r) preds[r] = out.at(r, 0);
    return preds;
}

double forward_one(const Mlp& mlp, const std::vector<double>& x) {
    Matrix batch(1, x.size());
    std::copy(x.begin(), x.end(), batch.data.begin());
    return forward(mlp, batch)[0];
}

double mae_loss(const std::vector<double>& preds, const std::vector<double>& targets) {
    return mae(targets, preds);
}

MlpGrads backward(const Mlp& mlp, const Matrix& batch_x, const std::vector<double>& batch_y) {
    if (batch_x.rows != batch_y.size()) {
        throw ShapeError("backward: batch size mismatch");
    }
    auto activations = forward_pass(mlp, batch_x);
    const std::size_t n = batch_x.rows;
    const std::size_t depth = mlp.layers.size();

    MlpGrads grads;
    grads.weights.reserve(depth);
    grads.bias.reserve(depth);
    for (const auto& layer : mlp.layers) {
        grads.weights.emplace_back(layer.weights.rows, layer.weights.cols);
        grads.bias.emplace_back(layer.bias.size(), 0.0);
    }

    // dL/d(output activation); MAE subgradient at 0 residual is 0.
    Matrix delta(n, 1);
    for (std::size_t r = 0; r < n; ++r) {
        delta.at(r, 0) = sign_or_zero(activations.back().at(r, 0) - batch_y[r]) /
                         static_cast<double>(n);
    }

    for (std::size_t li = depth; li-- > 0;) {
        const Layer& layer = mlp.layers[li];
        const Matrix& input = activations[li];
        const Matrix& output = activations[li + 1];

        // relu'(z) = [z > 0]; post-activation 0 means pre-activation <= 0.
        if (layer.activation == Activation::Relu) {
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t o = 0; o < delta.cols; ++o) {
                    if (output.at(r, o) <= 0.0) delta.at(r, o) = 0.0;
                }
            }
        }

        Matrix& gw = grads.weights[li];
        auto& gb = grads.bias[li];
        for (std::size_t r = 0; r < n; ++r) {
            const double* d = delta.row(r);
            const double* in = input.row(r);
            for (std::size_t o = 0; o < gw.rows; ++o) {
                if (d[o] == 0.0) continue;
                double* grow = gw.row(o);
                for (std::size_t i = 0; i < gw.cols; ++i) grow[i] += d[o] * in[i];
                gb[o] += d[o];
            }
        }

        if (li > 0) {
            Matrix prev_delta(n, layer.weights.cols);
            for (std::size_t r = 0; r < n; ++r) {
                const double* d = delta.row(r);
                double* pd = prev_delta.row(r);
                for (std::size_t o = 0; o < layer.weights.rows; ++o) {
                    if (d[o] == 0.0) continue;
                    const double* w = layer.weights.row(o);
                    for (std::size_t i = 0; i < layer.weights.cols; ++i) pd[i] += d[o] * w[i];
                }
            }
            delta = std::move(prev_delta);
        }
    }
    return grads;
}

AdamState make_adam_state(const Mlp& mlp, double learning_rate) {
    AdamState state;
    state.learning_rate = learning_rate;
    for (const auto& layer : mlp.layers) {
        state.m.weights.emplace_back(layer.weights.rows, layer.weights.cols);
        state.m.bias.emplace_back(layer.bias.size(), 0.0);
        state.v.weights.emplace_back(layer.weights.rows, layer.weights.cols);
        state.v.bias.emplace_back(layer.bias.size(), 0.0);
    }
    return state;
}

void adam_step(Mlp& mlp, const MlpGrads& grads, AdamState& state) {
    if (grads.weights.size() != mlp.layers.size()) {
        throw ShapeError("adam_step: gradient/layer count mismatch");
    }
    state.t += 1;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

    auto update = [&](double& theta, double g, double& m, double& v) {
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        double mhat = m / bc1;
        double vhat = v / bc2;
        theta -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    };

    for (std::size_t li = 0; li < mlp.layers.size(); ++li) {
        if (mlp.freeze_mask[li]) continue;
        Layer& layer = mlp.layers[li];
        if (grads.weights[li].rows != layer.weights.rows ||
            grads.weights[li].cols != layer.weights.cols) {
            throw ShapeError("adam_step: gradient shape mismatch at layer " + std::to_string(li));
        }
        for (std::size_t i = 0; i < layer.weights.data.size(); ++i) {
            update(layer.weights.data[i], grads.weights[li].data[i], state.m.weights[li].data[i],
                   state.v.weights[li].data[i]);
        }
        for (std::size_t i = 0; i < layer.bias.size(); ++i) {
            update(layer.bias[i], grads.bias[li][i], state.m.bias[li][i], state.v.bias[li][i]);
        }
    }
}

std::pair<Mlp, LossHistory> train(const Mlp& mlp, const NumericTable& data,
                                  const TrainConfig& config) {
    if (data.n_rows() == 0) throw ArgumentError("train: empty dataset");
    if (config.epochs < 1 || config.batch_size < 1) {
        throw ArgumentError("train: epochs and batch_size must be >= 1");
    }

    Mlp current = mlp;
    AdamState state = make_adam_state(current, config.learning_rate);
    Rng rng(config.seed);

    const std::size_t n = data.n_rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    LossHistory history;
    history.epoch_mae.reserve(config.epochs);
    Mlp best = current;
    double best_loss = std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.shuffle_each_epoch) rng.shuffle(order);

        double abs_err_sum = 0.0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            std::size_t end = std::min(start + config.batch_size, n);
            Matrix batch_x(end - start, data.n_features());
            std::vector<double> batch_y(end - start);
            for (std::size_t i = start; i < end; ++i) {
                std::copy_n(data.features.row(order[i]), data.n_features(),
                            batch_x.row(i - start));
                batch_y[i - start] = data.target[order[i]];
            }

            auto preds = forward(current, batch_x);
            for (std::size_t i = 0; i < preds.size(); ++i) {
                abs_err_sum += std::abs(preds[i] - batch_y[i]);
            }
            adam_step(current, backward(current, batch_x, batch_y), state);
        }

        double epoch_loss = abs_err_sum / static_cast<double>(n);
        if (!std::isfinite(epoch_loss)) {
            throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
        }
        history.epoch_mae.push_back(epoch_loss);
        if (epoch_loss < best_loss) {
            best_loss = epoch_loss;
            best = current;
            history.best_epoch = epoch;
        }
    }
    return {std::move(best), std::move(history)};
}

Mlp freeze_layers(const Mlp& mlp, std::size_t n_frozen) {
    if (n_frozen >= mlp.depth()) {
        throw ArgumentError("freeze_layers: the output layer must remain trainable (n_frozen=" +
                            std::to_string(n_frozen) + ", depth=" + std::to_string(mlp.depth()) +
                            ")");
    }
    Mlp out = mlp;
    for (std::size_t i = 0; i < out.depth(); ++i) out.freeze_mask[i] = i < n_frozen;
    return out;
}

namespace {

constexpr int kModelVersion = 1;

nlohmann::json schema_to_json(const EncodingSchema& schema) {
    nlohmann::json j;
    j["target_column"] = schema.target_column;
    j["numeric_columns"] = schema.numeric_columns;
    j["ordinal_maps"] = schema.ordinal_maps;
    return j;
}

EncodingSchema schema_from_json(const nlohmann::json& j) {
    EncodingSchema schema;
    schema.target_column = j.at("target_column").get<std::string>();
    schema.numeric_columns = j.at("numeric_columns").get<std::vector<std::string>>();
    schema.ordinal_maps =
        j.at("ordinal_maps").get<std::map<std::string, std::map<std::string, int>>>();
    return schema;
}

}  // namespace

void save_model(const Mlp& mlp, const EncodingSchema& schema, const Scaler& scaler,
                std::uint64_t seed, const std::string& config_fingerprint,
                const std::string& path) {
    nlohmann::json j;
    j["version"] = kModelVersion;
    j["input_dim"] = mlp.input_dim;
    j["widths"] = mlp.widths();
    j["seed"] = seed;
    j["config_fingerprint"] = config_fingerprint;

    std::vector<bool> mask(mlp.freeze_mask.begin(), mlp.freeze_mask.end());
    j["freeze_mask"] = mask;

    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : mlp.layers) {
        nlohmann::json lj;
        lj["activation"] = layer.activation == Activation::Relu ? "relu" : "linear";
        lj["weights"] = layer.weights.data;  // row-major
        lj["bias"] = layer.bias;
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);

    nlohmann::json sj;
    std::vector<double> mins, maxs;
    for (auto [lo, hi] : scaler.ranges) {
        mins.push_back(lo);
        maxs.push_back(hi);
    }
    sj["min"] = mins;
    sj["max"] = maxs;
    j["scaler"] = std::move(sj);
    j["schema"] = schema_to_json(schema);

    write_file_atomic(path, j.dump(2) + "\n");
}

LoadedModel load_model(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("corrupt model file " + path + ": " + e.what());
    }

    try {
        int version = j.at("version").get<int>();
        if (version != kModelVersion) {
            throw FormatError("unsupported model version " + std::to_string(version));
        }

        LoadedModel loaded;
        loaded.mlp.input_dim = j.at("input_dim").get<std::size_t>();
        auto widths = j.at("widths").get<std::vector<std::size_t>>();
        loaded.seed = j.at("seed").get<std::uint64_t>();
        loaded.config_fingerprint = j.at("config_fingerprint").get<std::string>();
        auto mask = j.at("freeze_mask").get<std::vector<bool>>();
        loaded.mlp.freeze_mask.assign(mask.begin(), mask.end());

        std::size_t fan_in = loaded.mlp.input_dim;
        const auto& layers = j.at("layers");
        if (layers.size() != widths.size()) throw FormatError("layer/width count mismatch");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            Layer layer;
            std::string act = layers[i].at("activation").get<std::string>();
            if (act == "relu") {
                layer.activation = Activation::Relu;
            } else if (act == "linear") {
                layer.activation = Activation::Linear;
            } else {
                throw FormatError("unknown activation '" + act + "'");
            }
            layer.weights = Matrix(widths[i], fan_in);
            auto flat = layers[i].at("weights").get<std::vector<double>>();
            if (flat.size() != widths[i] * fan_in) {
                throw FormatError("weight count mismatch at layer " + std::to_string(i));
            }
            layer.weights.data = std::move(flat);
            layer.bias = layers[i].at("bias").get<std::vector<double>>();
            if (layer.bias.size() != widths[i]) {
                throw FormatError("bias count mismatch at layer " + std::to_string(i));
            }
            loaded.mlp.layers.push_back(std::move(layer));
            fan_in = widths[i];
        }
        if (loaded.mlp.freeze_mask.size() != loaded.mlp.layers.size()) {
            throw FormatError("freeze mask length mismatch");
        }

        auto mins = j.at("scaler").at("min").get<std::vector<double>>();
        auto maxs = j.at("scaler").at("max").get<std::vector<double>>();
        if (mins.size() != maxs.size()) throw FormatError("scaler min/max length mismatch");
        for (std::size_t i = 0; i < mins.size(); ++i) {
            loaded.scaler.ranges.emplace_back(mins[i], maxs[i]);
        }
        loaded.schema = schema_from_json(j.at("schema"));
        return loaded;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed model file " + path + ": " + e.what());
    }
}

}  // namespace stuperf
