#include "stuperf/pca.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stuperf/errors.hpp"
#include "stuperf/fs.hpp"
#include "stuperf/rng.hpp"

namespace stuperf {

namespace {

constexpr std::size_t kMaxPowerIters = 1000;
constexpr double kPowerTol = 1e-10;
constexpr std::uint64_t kStartVectorSeed = 0x50ca50ca50ca50caULL;

Matrix covariance(const Matrix& X, std::vector<double>& mean) {
    const std::size_t n = X.rows;
    const std::size_t f = X.cols;
    mean.assign(f, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = X.row(r);
        for (std::size_t c = 0; c < f; ++c) mean[c] += row[c];
    }
    for (auto& m : mean) m /= static_cast<double>(n);

    Matrix cov(f, f);
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = X.row(r);
        for (std::size_t i = 0; i < f; ++i) {
            double di = row[i] - mean[i];
            for (std::size_t j = i; j < f; ++j) {
                cov.at(i, j) += di * (row[j] - mean[j]);
            }
        }
    }
    double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < f; ++i) {
        for (std::size_t j = i; j < f; ++j) {
            cov.at(i, j) /= denom;
            cov.at(j, i) = cov.at(i, j);
        }
    }
    return cov;
}

double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

/// Dominant eigenpair of a symmetric PSD matrix by power iteration.
std::pair<double, std::vector<double>> power_iterate(const Matrix& A, Rng& rng) {
    const std::size_t f = A.cols;
    std::vector<double> v(f);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    double n0 = norm(v);
    for (auto& x : v) x /= n0;

    std::vector<double> next(f);
    for (std::size_t iter = 0; iter < kMaxPowerIters; ++iter) {
        for (std::size_t i = 0; i < f; ++i) {
            double s = 0.0;
            const double* row = A.row(i);
            for (std::size_t j = 0; j < f; ++j) s += row[j] * v[j];
            next[i] = s;
        }
        double nn = norm(next);
        if (nn < 1e-300) {
            // Zero (deflated) matrix: the current unit vector is a valid
            // eigenvector with eigenvalue 0.
            return {0.0, v};
        }
        double diff = 0.0;
        for (std::size_t i = 0; i < f; ++i) {
            next[i] /= nn;
            diff = std::max(diff, std::abs(std::abs(next[i]) - std::abs(v[i])));
        }
        std::swap(v, next);
        if (diff < kPowerTol) {
            double lambda = 0.0;
            for (std::size_t i = 0; i < f; ++i) {
                double s = 0.0;
                const double* row = A.row(i);
                for (std::size_t j = 0; j < f; ++j) s += row[j] * v[j];
                lambda += v[i] * s;
            }
            return {lambda, v};
        }
    }
    throw NumericError("PCA power iteration did not converge");
}

void fix_sign(std::vector<double>& v) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
    }
    if (v[arg] < 0.0) {
        for (auto& x : v) x = -x;
    }
}

}  // namespace

PcaModel fit_pca(const Matrix& X) {
    if (X.rows < 3) throw ArgumentError("fit_pca requires at least 3 rows");
    if (X.cols < 2) throw ArgumentError("fit_pca requires at least 2 features");
    for (double v : X.data) {
        if (!std::isfinite(v)) throw ArgumentError("fit_pca: non-finite input");
    }

    PcaModel model;
    Matrix cov = covariance(X, model.mean);
    Rng rng(kStartVectorSeed);

    model.components = Matrix(2, X.cols);
    for (std::size_t comp = 0; comp < 2; ++comp) {
        auto [lambda, v] = power_iterate(cov, rng);
        if (comp == 1) {
            // Re-orthogonalize against the first component to scrub drift.
            double dot = 0.0;
            for (std::size_t i = 0; i < X.cols; ++i) dot += v[i] * model.components.at(0, i);
            for (std::size_t i = 0; i < X.cols; ++i) v[i] -= dot * model.components.at(0, i);
            double n = norm(v);
            if (n > 1e-300) {
                for (auto& x : v) x /= n;
            }
        }
        fix_sign(v);
        model.explained_variance[comp] = std::max(lambda, 0.0);
        for (std::size_t i = 0; i < X.cols; ++i) model.components.at(comp, i) = v[i];

        // Deflate: A <- A - lambda v v^T
        for (std::size_t i = 0; i < X.cols; ++i) {
            for (std::size_t j = 0; j < X.cols; ++j) {
                cov.at(i, j) -= lambda * v[i] * v[j];
            }
        }
    }
    return model;
}

Matrix project(const PcaModel& model, const Matrix& X) {
    if (X.cols != model.components.cols) {
        throw ShapeError("project: feature count " + std::to_string(X.cols) +
                         " != model dimension " + std::to_string(model.components.cols));
    }
    Matrix out(X.rows, 2);
    for (std::size_t r = 0; r < X.rows; ++r) {
        const double* row = X.row(r);
        for (std::size_t comp = 0; comp < 2; ++comp) {
            double s = 0.0;
            for (std::size_t c = 0; c < X.cols; ++c) {
                s += (row[c] - model.mean[c]) * model.components.at(comp, c);
            }
            out.at(r, comp) = s;
        }
    }
    return out;
}

void export_scatter(const Matrix& coords, const std::vector<std::size_t>& labels,
                    const std::string& path) {
    if (coords.rows != labels.size()) {
        throw ArgumentError("export_scatter: coordinate/label count mismatch");
    }
    std::ostringstream out;
    out.precision(17);
    out << "pc1,pc2,cluster\n";
    for (std::size_t r = 0; r < coords.rows; ++r) {
        out << coords.at(r, 0) << ',' << coords.at(r, 1) << ',' << labels[r] << '\n';
    }
    write_file_atomic(path, out.str());
}

}  // namespace stuperf
