#pragma once

#include <array>
#include <string>
#include <vector>

#include "stuperf/matrix.hpp"

namespace stuperf {

/// Two-component PCA of mean-centered data.
struct PcaModel {
    std::vector<double> mean;
    Matrix components;  // 2 x n_features, orthonormal rows
    std::array<double, 2> explained_variance{};
};

/// Top-2 eigenvectors of the sample covariance (n-1 denominator), found by
/// power iteration with deflation. Each component's largest-magnitude entry
/// is made positive.
PcaModel fit_pca(const Matrix& X);

/// (X - mean) * components^T, one (pc1, pc2) row per input row.
Matrix project(const PcaModel& model, const Matrix& X);

/// CSV with columns pc1, pc2, cluster.
void export_scatter(const Matrix& coords, const std::vector<std::size_t>& labels,
                    const std::string& path);

}  // namespace stuperf
