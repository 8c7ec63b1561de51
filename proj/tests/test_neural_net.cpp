#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "stuperf/neural_net.hpp"
#include "stuperf/rng.hpp"

using namespace stuperf;

namespace {

NumericTable table_from(const Matrix& x, const std::vector<double>& y) {
    NumericTable t;
    t.features = x;
    t.target = y;
    for (std::size_t c = 0; c < x.cols; ++c) t.feature_names.push_back("f" + std::to_string(c));
    return t;
}

/// Access flattened parameters for finite differencing.
std::vector<double*> parameter_refs(Mlp& mlp) {
    std::vector<double*> refs;
    for (auto& layer : mlp.layers) {
        for (auto& w : layer.weights.data) refs.push_back(&w);
        for (auto& b : layer.bias) refs.push_back(&b);
    }
    return refs;
}

std::vector<double> flatten_grads(const MlpGrads& grads) {
    std::vector<double> flat;
    for (std::size_t li = 0; li < grads.weights.size(); ++li) {
        flat.insert(flat.end(), grads.weights[li].data.begin(), grads.weights[li].data.end());
        flat.insert(flat.end(), grads.bias[li].begin(), grads.bias[li].end());
    }
    return flat;
}

double batch_mae(const Mlp& mlp, const Matrix& x, const std::vector<double>& y) {
    return mae_loss(forward(mlp, x), y);
}

}  // namespace

TEST_CASE("init_mlp shapes, parameter count and determinism") {
    Mlp mlp = init_mlp(32, kDefaultWidths, 7);
    CHECK(mlp.depth() == 6);
    CHECK(mlp.widths() == std::vector<std::size_t>{32, 16, 8, 4, 2, 1});
    // Closed form: sum over layers of out*in + out.
    std::size_t expected = 0;
    std::size_t fan_in = 32;
    for (std::size_t w : kDefaultWidths) {
        expected += w * fan_in + w;
        fan_in = w;
    }
    CHECK(expected == 1769);
    CHECK(mlp.parameter_count() == expected);

    for (const auto& layer : mlp.layers) {
        for (double b : layer.bias) CHECK(b == 0.0);
    }
    CHECK(mlp.layers.back().activation == Activation::Linear);
    CHECK(mlp.layers.front().activation == Activation::Relu);

    Mlp again = init_mlp(32, kDefaultWidths, 7);
    for (std::size_t i = 0; i < mlp.depth(); ++i) {
        CHECK(mlp.layers[i].weights == again.layers[i].weights);
    }
    Mlp other = init_mlp(32, kDefaultWidths, 8);
    CHECK(mlp.layers[0].weights != other.layers[0].weights);
}

TEST_CASE("he-uniform range respects fan-in") {
    Mlp mlp = init_mlp(10, {4, 1}, 3);
    double limit = std::sqrt(6.0 / 10.0);
    for (double w : mlp.layers[0].weights.data) {
        CHECK(std::abs(w) <= limit);
    }
}

TEST_CASE("init_mlp rejects bad widths") {
    CHECK_THROWS_AS(init_mlp(4, {}, 1), ArgumentError);
    CHECK_THROWS_AS(init_mlp(4, {3, 2}, 1), ArgumentError);
    CHECK_THROWS_AS(init_mlp(0, {1}, 1), ArgumentError);
}

TEST_CASE("forward trivial cases") {
    Mlp zero = init_mlp(3, {2, 1}, 1);
    for (auto& layer : zero.layers) {
        for (auto& w : layer.weights.data) w = 0.0;
    }
    Matrix x(1, 3);
    x.data = {1.0, -2.0, 3.0};
    CHECK(forward(zero, x)[0] == 0.0);

    Mlp linear = init_mlp(1, {1}, 1);
    linear.layers[0].weights.data = {2.0};
    linear.layers[0].bias = {1.0};
    CHECK(forward_one(linear, {3.0}) == 7.0);
}

TEST_CASE("forward matches a straight-line recomputation oracle") {
    Mlp mlp = init_mlp(4, {3, 2, 1}, 9);
    Rng rng(55);
    Matrix x(5, 4);
    for (auto& v : x.data) v = rng.uniform(-2, 2);

    auto preds = forward(mlp, x);
    for (std::size_t r = 0; r < x.rows; ++r) {
        std::vector<double> a(x.row(r), x.row(r) + 4);
        for (const auto& layer : mlp.layers) {
            std::vector<double> next(layer.weights.rows);
            for (std::size_t o = 0; o < layer.weights.rows; ++o) {
                double z = layer.bias[o];
                for (std::size_t i = 0; i < layer.weights.cols; ++i) {
                    z += layer.weights.at(o, i) * a[i];
                }
                next[o] = layer.activation == Activation::Relu ? std::max(0.0, z) : z;
            }
            a = std::move(next);
        }
        CHECK(preds[r] == doctest::Approx(a[0]).epsilon(1e-12));
    }
}

TEST_CASE("batch forward equals row-by-row forward") {
    Mlp mlp = init_mlp(6, {4, 2, 1}, 21);
    Rng rng(6);
    Matrix x(9, 6);
    for (auto& v : x.data) v = rng.uniform(-1, 1);
    auto preds = forward(mlp, x);
    for (std::size_t r = 0; r < x.rows; ++r) {
        std::vector<double> row(x.row(r), x.row(r) + 6);
        CHECK(std::abs(preds[r] - forward_one(mlp, row)) < 1e-12);
    }
}

TEST_CASE("forward rejects width mismatch") {
    Mlp mlp = init_mlp(3, {1}, 1);
    CHECK_THROWS_AS(forward(mlp, Matrix(1, 4, 0.0)), ShapeError);
}

TEST_CASE("mae_loss basics") {
    CHECK(mae_loss({1, 2}, {1, 2}) == 0.0);
    CHECK(mae_loss({1, 3}, {2, 2}) == 1.0);
    CHECK_THROWS_AS(mae_loss({}, {}), ArgumentError);
}

TEST_CASE("backward hand case for a 1-layer net") {
    Mlp mlp = init_mlp(1, {1}, 1);
    mlp.layers[0].weights.data = {1.0};
    mlp.layers[0].bias = {0.0};
    mlp.layers[0].activation = Activation::Linear;
    Matrix x(1, 1);
    x.data = {2.0};
    MlpGrads grads = backward(mlp, x, {0.0});
    CHECK(grads.weights[0].data[0] == 2.0);  // sign(2) * x
    CHECK(grads.bias[0][0] == 1.0);
}

TEST_CASE("zero residuals give zero gradients") {
    Mlp mlp = init_mlp(2, {1}, 1);
    mlp.layers[0].weights.data = {1.0, 1.0};
    mlp.layers[0].bias = {0.0};
    mlp.layers[0].activation = Activation::Linear;
    Matrix x(2, 2);
    x.data = {1.0, 2.0, 3.0, 4.0};
    MlpGrads grads = backward(mlp, x, {3.0, 7.0});
    for (double g : flatten_grads(grads)) CHECK(g == 0.0);
}

namespace {

/// Finite differences are only valid away from the relu and MAE kinks.
/// Recomputes pre-activations and residuals independently and reports
/// whether any of them is close enough to a kink for an h-perturbation to
/// cross it.
bool near_kink(const Mlp& mlp, const Matrix& x, const std::vector<double>& y, double margin) {
    for (std::size_t r = 0; r < x.rows; ++r) {
        std::vector<double> a(x.row(r), x.row(r) + x.cols);
        for (const auto& layer : mlp.layers) {
            std::vector<double> next(layer.weights.rows);
            for (std::size_t o = 0; o < layer.weights.rows; ++o) {
                double z = layer.bias[o];
                for (std::size_t i = 0; i < layer.weights.cols; ++i) {
                    z += layer.weights.at(o, i) * a[i];
                }
                if (layer.activation == Activation::Relu) {
                    if (std::abs(z) < margin) return true;
                    next[o] = std::max(0.0, z);
                } else {
                    next[o] = z;
                }
            }
            a = std::move(next);
        }
        if (std::abs(a[0] - y[r]) < margin) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences") {
    std::size_t checked = 0;
    for (std::uint64_t trial = 0; checked < 20 && trial < 200; ++trial) {
        Rng rng(trial * 31 + 3);
        std::size_t input_dim = 1 + rng.below(4);
        std::vector<std::size_t> widths;
        std::size_t hidden = rng.below(3);
        for (std::size_t i = 0; i < hidden; ++i) widths.push_back(1 + rng.below(4));
        widths.push_back(1);

        Mlp mlp = init_mlp(input_dim, widths, trial + 1);
        if (mlp.parameter_count() > 50) continue;
        for (auto& layer : mlp.layers) {
            for (auto& b : layer.bias) b = rng.uniform(-0.5, 0.5);
        }

        std::size_t batch = 1 + rng.below(5);
        Matrix x(batch, input_dim);
        for (auto& v : x.data) v = rng.uniform(-2, 2);
        std::vector<double> y(batch);
        for (auto& v : y) v = rng.uniform(-3, 3);
        if (near_kink(mlp, x, y, 1e-3)) continue;

        auto analytic = flatten_grads(backward(mlp, x, y));
        auto refs = parameter_refs(mlp);
        REQUIRE(analytic.size() == refs.size());

        const double h = 1e-5;
        for (std::size_t p = 0; p < refs.size(); ++p) {
            double saved = *refs[p];
            *refs[p] = saved + h;
            double up = batch_mae(mlp, x, y);
            *refs[p] = saved - h;
            double down = batch_mae(mlp, x, y);
            *refs[p] = saved;
            double numeric = (up - down) / (2.0 * h);
            double tol = std::max(1e-7, 1e-4 * std::abs(numeric));
            CHECK(std::abs(analytic[p] - numeric) <= tol);
        }
        ++checked;
    }
    CHECK(checked == 20);
}

TEST_CASE("adam first step has magnitude about the learning rate") {
    Mlp mlp = init_mlp(1, {1}, 1);
    mlp.layers[0].weights.data = {0.5};
    AdamState state = make_adam_state(mlp, 0.001);
    MlpGrads grads;
    grads.weights.emplace_back(1, 1);
    grads.weights[0].data = {0.37};
    grads.bias.emplace_back(1, 0.0);
    double before = mlp.layers[0].weights.data[0];
    adam_step(mlp, grads, state);
    double delta = std::abs(mlp.layers[0].weights.data[0] - before);
    CHECK(delta >= 0.999 * 0.001);
    CHECK(delta <= 0.001);
    CHECK(state.t == 1);
}

TEST_CASE("adam with zero gradient leaves parameters unchanged") {
    Mlp mlp = init_mlp(2, {2, 1}, 4);
    Mlp before = mlp;
    AdamState state = make_adam_state(mlp, 0.01);
    MlpGrads grads;
    for (const auto& layer : mlp.layers) {
        grads.weights.emplace_back(layer.weights.rows, layer.weights.cols);
        grads.bias.emplace_back(layer.bias.size(), 0.0);
    }
    adam_step(mlp, grads, state);
    for (std::size_t i = 0; i < mlp.depth(); ++i) {
        CHECK(mlp.layers[i].weights == before.layers[i].weights);
        CHECK(mlp.layers[i].bias == before.layers[i].bias);
    }
}

TEST_CASE("frozen layers are untouched by adam, moments included") {
    Mlp mlp = freeze_layers(init_mlp(3, {2, 1}, 8), 1);
    Mlp before = mlp;
    AdamState state = make_adam_state(mlp, 0.01);
    MlpGrads grads;
    Rng rng(17);
    for (const auto& layer : mlp.layers) {
        grads.weights.emplace_back(layer.weights.rows, layer.weights.cols);
        for (auto& g : grads.weights.back().data) g = rng.uniform(-1, 1);
        grads.bias.emplace_back(layer.bias.size(), 0.5);
    }
    adam_step(mlp, grads, state);
    CHECK(mlp.layers[0].weights == before.layers[0].weights);
    CHECK(mlp.layers[0].bias == before.layers[0].bias);
    for (double m : state.m.weights[0].data) CHECK(m == 0.0);
    CHECK(mlp.layers[1].weights != before.layers[1].weights);
}

TEST_CASE("freeze_layers mask and contract") {
    Mlp mlp = init_mlp(32, kDefaultWidths, 1);
    Mlp none = freeze_layers(mlp, 0);
    for (bool f : none.freeze_mask) CHECK_FALSE(f);
    Mlp three = freeze_layers(mlp, 3);
    CHECK(three.freeze_mask == std::vector<bool>{true, true, true, false, false, false});
    CHECK_THROWS_AS(freeze_layers(mlp, 6), ArgumentError);
}

TEST_CASE("bias-only fit converges on a constant target") {
    // Single linear unit with zeroed weights: only the bias learns, and the
    // MAE objective is convex in it.
    Mlp mlp = init_mlp(1, {1}, 1);
    mlp.layers[0].weights.data = {0.0};
    Matrix x(10, 1);
    std::vector<double> y(10, 0.25);
    for (std::size_t i = 0; i < 10; ++i) x.at(i, 0) = static_cast<double>(i) / 10.0;

    TrainConfig config;
    config.epochs = 500;
    config.batch_size = 10;
    config.seed = 3;
    auto [trained, history] = train(mlp, table_from(x, y), config);
    CHECK(*std::min_element(history.epoch_mae.begin(), history.epoch_mae.end()) < 0.01);
}

TEST_CASE("one adam step per epoch when the batch covers the data") {
    Mlp mlp = init_mlp(2, {1}, 5);
    Matrix x(4, 2, 0.5);
    std::vector<double> y = {1, 2, 3, 4};
    TrainConfig config;
    config.epochs = 1;
    config.batch_size = 100;
    config.seed = 1;
    auto [trained, history] = train(mlp, table_from(x, y), config);
    CHECK(history.epoch_mae.size() == 1);

    // Replicate by hand: one forward + one adam step.
    Mlp manual = init_mlp(2, {1}, 5);
    AdamState state = make_adam_state(manual, config.learning_rate);
    Rng rng(config.seed);
    std::vector<std::size_t> order = {0, 1, 2, 3};
    rng.shuffle(order);
    Matrix bx(4, 2);
    std::vector<double> by(4);
    for (std::size_t i = 0; i < 4; ++i) {
        bx.at(i, 0) = x.at(order[i], 0);
        bx.at(i, 1) = x.at(order[i], 1);
        by[i] = y[order[i]];
    }
    adam_step(manual, backward(manual, bx, by), state);
    CHECK(manual.layers[0].weights == trained.layers[0].weights);
    CHECK(state.t == 1);
}

TEST_CASE("training is deterministic and reports the best epoch") {
    Rng rng(2);
    Matrix x(20, 3);
    for (auto& v : x.data) v = rng.uniform(0, 1);
    std::vector<double> y(20);
    for (auto& v : y) v = rng.uniform(0, 20);
    NumericTable data = table_from(x, y);

    TrainConfig config;
    config.epochs = 50;
    config.batch_size = 4;
    config.seed = 77;
    Mlp mlp = init_mlp(3, {4, 2, 1}, 10);
    auto [a, ha] = train(mlp, data, config);
    auto [b, hb] = train(mlp, data, config);
    CHECK(ha.epoch_mae == hb.epoch_mae);
    for (std::size_t i = 0; i < a.depth(); ++i) {
        CHECK(a.layers[i].weights == b.layers[i].weights);
    }
    double best = *std::min_element(ha.epoch_mae.begin(), ha.epoch_mae.end());
    CHECK(ha.epoch_mae[ha.best_epoch] == best);
}

TEST_CASE("frozen parameters survive training bit-exactly") {
    Rng rng(91);
    Matrix x(16, 4);
    for (auto& v : x.data) v = rng.uniform(-1, 1);
    std::vector<double> y(16);
    for (auto& v : y) v = rng.uniform(-5, 5);

    Mlp mlp = freeze_layers(init_mlp(4, {3, 2, 1}, 12), 2);
    TrainConfig config;
    config.epochs = 30;
    config.batch_size = 5;
    config.seed = 8;
    auto [trained, history] = train(mlp, table_from(x, y), config);
    CHECK(trained.layers[0].weights == mlp.layers[0].weights);
    CHECK(trained.layers[0].bias == mlp.layers[0].bias);
    CHECK(trained.layers[1].weights == mlp.layers[1].weights);
    CHECK(trained.layers[2].weights != mlp.layers[2].weights);
}

TEST_CASE("model save/load round-trip is bit-exact") {
    Mlp mlp = freeze_layers(init_mlp(5, {4, 2, 1}, 33), 1);
    EncodingSchema schema;
    schema.target_column = "G3";
    schema.numeric_columns = {"age", "G3"};
    schema.ordinal_maps["sex"] = {{"F", 0}, {"M", 1}};
    Scaler scaler;
    scaler.ranges = {{0.0, 1.0}, {2.5, 19.0}, {-3.0, -3.0}, {0.1, 0.2}, {5.0, 6.0}};

    const std::string path = "test_model_roundtrip.json";
    save_model(mlp, schema, scaler, 42, "fingerprint-x", path);
    LoadedModel loaded = load_model(path);
    std::remove(path.c_str());

    CHECK(loaded.seed == 42);
    CHECK(loaded.config_fingerprint == "fingerprint-x");
    CHECK(loaded.mlp.input_dim == 5);
    CHECK(loaded.mlp.widths() == std::vector<std::size_t>{4, 2, 1});
    CHECK(loaded.mlp.freeze_mask == mlp.freeze_mask);
    CHECK(loaded.schema.ordinal_maps == schema.ordinal_maps);
    CHECK(loaded.scaler.ranges == scaler.ranges);

    Rng rng(1);
    for (int i = 0; i < 10; ++i) {
        std::vector<double> x(5);
        for (auto& v : x) v = rng.uniform(-4, 4);
        double a = forward_one(mlp, x);
        double b = forward_one(loaded.mlp, x);
        CHECK(a == b);  // 0 ulp
    }
}

TEST_CASE("truncated model file is a format error") {
    Mlp mlp = init_mlp(2, {1}, 1);
    const std::string path = "test_model_truncated.json";
    save_model(mlp, EncodingSchema{}, Scaler{}, 0, "", path);
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out(path, std::ios::trunc);
    out << text.substr(0, text.size() / 2);
    out.close();
    CHECK_THROWS_AS(load_model(path), FormatError);
    std::remove(path.c_str());
}

TEST_CASE("model file carries the default widths") {
    Mlp mlp = init_mlp(32, kDefaultWidths, 2);
    const std::string path = "test_model_widths.json";
    save_model(mlp, EncodingSchema{}, Scaler{}, 0, "", path);
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::remove(path.c_str());
    CHECK(text.find("\"widths\": [\n    32,\n    16,\n    8,\n    4,\n    2,\n    1\n  ]") !=
          std::string::npos);
}
