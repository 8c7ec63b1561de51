#include "stuperf/metrics.hpp"

#include <cmath>

#include "stuperf/errors.hpp"

namespace stuperf {

namespace {

void check_lengths(const std::vector<double>& y, const std::vector<double>& yhat) {
    if (y.empty()) throw ArgumentError("metric on empty vectors");
    if (y.size() != yhat.size()) {
        throw ArgumentError("metric length mismatch: " + std::to_string(y.size()) + " vs " +
                            std::to_string(yhat.size()));
    }
}

}  // namespace

double rmse(const std::vector<double>& y, const std::vector<double>& yhat) {
    check_lengths(y, yhat);
    double ss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double d = yhat[i] - y[i];
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(y.size()));
}

double mae(const std::vector<double>& y, const std::vector<double>& yhat) {
    check_lengths(y, yhat);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(yhat[i] - y[i]);
    return s / static_cast<double>(y.size());
}

double r2(const std::vector<double>& y, const std::vector<double>& yhat) {
    check_lengths(y, yhat);
    if (y.size() < 2) throw ArgumentError("r2 requires at least 2 samples");
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());

    double ss_tot = 0.0;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_tot += (y[i] - mean) * (y[i] - mean);
        ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    }
    if (ss_tot == 0.0) throw MetricError("r2 undefined: target has zero variance");
    return 1.0 - ss_res / ss_tot;
}

EvalReport evaluate(const std::vector<double>& y, const std::vector<double>& yhat,
                    Provenance provenance) {
    EvalReport report;
    report.rmse = rmse(y, yhat);
    report.mae = mae(y, yhat);
    report.r2 = r2(y, yhat);
    report.n = y.size();
    report.provenance = std::move(provenance);
    return report;
}

}  // namespace stuperf
