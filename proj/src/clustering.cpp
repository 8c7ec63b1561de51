#include "stuperf/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stuperf/errors.hpp"
#include "stuperf/rng.hpp"

namespace stuperf {

namespace {

double sq_dist(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::size_t nearest_centroid(const Matrix& centroids, const double* point, double* out_dist) {
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.rows; ++c) {
        double d = sq_dist(centroids.row(c), point, centroids.cols);
        if (d < best_dist) {
            best_dist = d;
            best = c;
        }
    }
    if (out_dist != nullptr) *out_dist = best_dist;
    return best;
}

Matrix kmeanspp_init(const Matrix& X, std::size_t k, Rng& rng) {
    Matrix centroids(k, X.cols);
    std::size_t first = static_cast<std::size_t>(rng.below(X.rows));
    std::copy_n(X.row(first), X.cols, centroids.row(0));

    std::vector<double> dist(X.rows, std::numeric_limits<double>::infinity());
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t r = 0; r < X.rows; ++r) {
            dist[r] = std::min(dist[r], sq_dist(X.row(r), centroids.row(c - 1), X.cols));
            total += dist[r];
        }
        std::size_t chosen;
        if (total == 0.0) {
            chosen = static_cast<std::size_t>(rng.below(X.rows));
        } else {
            double u = rng.next_double() * total;
            double acc = 0.0;
            chosen = X.rows - 1;
            for (std::size_t r = 0; r < X.rows; ++r) {
                acc += dist[r];
                if (acc >= u) {
                    chosen = r;
                    break;
                }
            }
        }
        std::copy_n(X.row(chosen), X.cols, centroids.row(c));
    }
    return centroids;
}

ClusterModel lloyd(const Matrix& X, Matrix centroids, std::size_t max_iter, double tol) {
    const std::size_t k = centroids.rows;
    ClusterModel model;
    model.k = k;

    std::vector<std::size_t> labels(X.rows, 0);
    std::vector<double> point_dist(X.rows, 0.0);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        for (std::size_t r = 0; r < X.rows; ++r) {
            labels[r] = nearest_centroid(centroids, X.row(r), &point_dist[r]);
        }

        Matrix sums(k, X.cols);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t r = 0; r < X.rows; ++r) {
            double* sum = sums.row(labels[r]);
            const double* p = X.row(r);
            for (std::size_t c = 0; c < X.cols; ++c) sum[c] += p[c];
            ++counts[labels[r]];
        }

        // Reseed empty clusters to the point farthest from its centroid.
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            std::size_t far = 0;
            double far_dist = -1.0;
            for (std::size_t r = 0; r < X.rows; ++r) {
                if (counts[labels[r]] > 1 && point_dist[r] > far_dist) {
                    far_dist = point_dist[r];
                    far = r;
                }
            }
            std::size_t old = labels[far];
            const double* p = X.row(far);
            for (std::size_t j = 0; j < X.cols; ++j) {
                sums.at(old, j) -= p[j];
                sums.at(c, j) += p[j];
            }
            --counts[old];
            counts[c] = 1;
            labels[far] = c;
        }

        double max_shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            double* row = centroids.row(c);
            const double* sum = sums.row(c);
            double shift = 0.0;
            for (std::size_t j = 0; j < X.cols; ++j) {
                double updated = sum[j] / static_cast<double>(counts[c]);
                double d = updated - row[j];
                shift += d * d;
                row[j] = updated;
            }
            max_shift = std::max(max_shift, std::sqrt(shift));
        }

        model.iterations_run = iter + 1;
        if (max_shift < tol) {
            model.converged = true;
            break;
        }
    }

    model.centroids = std::move(centroids);
    return model;
}

}  // namespace

ClusterModel kmeans(const Matrix& X, std::size_t k, std::uint64_t seed, std::size_t max_iter,
                    double tol) {
    if (k == 0 || k > X.rows) {
        throw ArgumentError("kmeans: k must satisfy 1 <= k <= n_rows (k=" + std::to_string(k) +
                            ", n=" + std::to_string(X.rows) + ")");
    }
    Rng rng(seed);
    ClusterModel model = lloyd(X, kmeanspp_init(X, k, rng), max_iter, tol);
    model.seed = seed;
    return model;
}

ClusterModel kmeans_restarts(const Matrix& X, std::size_t k, std::uint64_t seed,
                             std::size_t restarts, std::size_t max_iter, double tol) {
    if (restarts == 0) throw ArgumentError("kmeans_restarts: restarts must be >= 1");
    ClusterModel best;
    double best_wcss = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < restarts; ++r) {
        ClusterModel candidate = kmeans(X, k, mix_seed(seed, r), max_iter, tol);
        double w = wcss(X, candidate);
        if (w < best_wcss) {
            best_wcss = w;
            best = std::move(candidate);
        }
    }
    return best;
}

double wcss(const Matrix& X, const ClusterModel& model) {
    if (model.centroids.cols != X.cols) {
        throw ShapeError("wcss: centroid dimension " + std::to_string(model.centroids.cols) +
                         " != data dimension " + std::to_string(X.cols));
    }
    double total = 0.0;
    for (std::size_t r = 0; r < X.rows; ++r) {
        double d = 0.0;
        nearest_centroid(model.centroids, X.row(r), &d);
        total += d;
    }
    return total;
}

std::vector<std::size_t> assign(const ClusterModel& model, const Matrix& X) {
    if (model.centroids.cols != X.cols) {
        throw ShapeError("assign: centroid dimension " + std::to_string(model.centroids.cols) +
                         " != data dimension " + std::to_string(X.cols));
    }
    std::vector<std::size_t> labels(X.rows);
    for (std::size_t r = 0; r < X.rows; ++r) {
        labels[r] = nearest_centroid(model.centroids, X.row(r), nullptr);
    }
    return labels;
}

ElbowResult elbow_select(const Matrix& X, std::size_t k_max, std::uint64_t seed,
                         std::size_t restarts) {
    if (k_max < 3) throw ArgumentError("elbow_select: k_max must be >= 3");
    if (k_max > X.rows) throw ArgumentError("elbow_select: k_max exceeds number of rows");

    ElbowResult result;
    for (std::size_t k = 1; k <= k_max; ++k) {
        ClusterModel best = kmeans_restarts(X, k, mix_seed(seed, 1000 + k), restarts);
        double best_wcss = wcss(X, best);

        // Warm start from the best (k-1)-solution plus its farthest point.
        // Keeps the curve non-increasing in k.
        if (k > 1) {
            const ClusterModel& prev = result.models.back();
            Matrix init(k, X.cols);
            for (std::size_t c = 0; c < k - 1; ++c) {
                std::copy_n(prev.centroids.row(c), X.cols, init.row(c));
            }
            std::size_t far = 0;
            double far_dist = -1.0;
            for (std::size_t r = 0; r < X.rows; ++r) {
                double d = 0.0;
                nearest_centroid(prev.centroids, X.row(r), &d);
                if (d > far_dist) {
                    far_dist = d;
                    far = r;
                }
            }
            std::copy_n(X.row(far), X.cols, init.row(k - 1));
            ClusterModel warm = lloyd(X, std::move(init), 300, 1e-6);
            warm.seed = seed;
            double w = wcss(X, warm);
            if (w < best_wcss) {
                best_wcss = w;
                best = std::move(warm);
            }
        }

        result.curve.values.push_back(best_wcss);
        result.models.push_back(std::move(best));
    }

    std::size_t best_k = 2;
    double best_curvature = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 2; k + 1 <= k_max; ++k) {
        double curvature =
            result.curve.at_k(k - 1) - 2.0 * result.curve.at_k(k) + result.curve.at_k(k + 1);
        if (curvature > best_curvature) {
            best_curvature = curvature;
            best_k = k;
        }
    }
    result.k = best_k;
    return result;
}

}  // namespace stuperf
