#pragma once

#include <cstdint>
#include <vector>

#include "stuperf/matrix.hpp"

namespace stuperf {

struct ClusterModel {
    Matrix centroids;  // k x n_features
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::size_t iterations_run = 0;
    bool converged = false;
};

/// WCSS values for k = 1..k_max, best of restarts.
struct WcssCurve {
    std::vector<double> values;

    double at_k(std::size_t k) const { return values[k - 1]; }
    std::size_t k_max() const { return values.size(); }
};

struct ElbowResult {
    std::size_t k = 0;
    WcssCurve curve;
    std::vector<ClusterModel> models;  // per k, index k-1
};

/// Lloyd's algorithm from a k-means++ start. Empty clusters are reseeded to
/// the point farthest from its assigned centroid.
ClusterModel kmeans(const Matrix& X, std::size_t k, std::uint64_t seed,
                    std::size_t max_iter = 300, double tol = 1e-6);

/// Best WCSS over `restarts` independent seeded runs; ties keep the earliest.
ClusterModel kmeans_restarts(const Matrix& X, std::size_t k, std::uint64_t seed,
                             std::size_t restarts, std::size_t max_iter = 300,
                             double tol = 1e-6);

double wcss(const Matrix& X, const ClusterModel& model);

std::vector<std::size_t> assign(const ClusterModel& model, const Matrix& X);

/// Builds the WCSS curve for k = 1..k_max and returns the k in [2, k_max-1]
/// with the largest discrete second difference of the curve.
ElbowResult elbow_select(const Matrix& X, std::size_t k_max, std::uint64_t seed,
                         std::size_t restarts = 10);

}  // namespace stuperf
