#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "spillover/dataset.hpp"
#include "spillover/error.hpp"

namespace spillover {

/// Hard 2-way partition stored as a label per sample (0 or 1).
///
/// The n x 2 one-hot membership matrix is derived on demand. Both clusters are
/// required to be non-empty.
class ClusterAssignment {
public:
    ClusterAssignment() = default;

    explicit ClusterAssignment(std::vector<int> labels) : labels_(std::move(labels)) {
        for (const int l : labels_) {
            if (l != 0 && l != 1) throw DataError("cluster labels must be 0 or 1");
            ++sizes_[static_cast<std::size_t>(l)];
        }
        if (sizes_[0] == 0 || sizes_[1] == 0) throw DataError("both clusters must be non-empty");
    }

    [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
    [[nodiscard]] int label(std::size_t i) const { return labels_[i]; }
    [[nodiscard]] const std::vector<int>& labels() const noexcept { return labels_; }
    [[nodiscard]] std::array<std::size_t, 2> cluster_sizes() const noexcept { return sizes_; }
    [[nodiscard]] std::size_t cluster_size(int k) const { return sizes_[static_cast<std::size_t>(k)]; }

    [[nodiscard]] std::vector<std::size_t> members(int k) const {
        std::vector<std::size_t> out;
        out.reserve(cluster_size(k));
        for (std::size_t i = 0; i < labels_.size(); ++i)
            if (labels_[i] == k) out.push_back(i);
        return out;
    }

    /// Y in {0,1}^{n x 2}.
    [[nodiscard]] Matrix membership() const {
        Matrix y = Matrix::Zero(static_cast<Eigen::Index>(labels_.size()), 2);
        for (std::size_t i = 0; i < labels_.size(); ++i) y(static_cast<Eigen::Index>(i), labels_[i]) = 1.0;
        return y;
    }

    /// Same partition with cluster ids exchanged.
    [[nodiscard]] ClusterAssignment swapped() const {
        std::vector<int> l(labels_);
        for (auto& v : l) v = 1 - v;
        return ClusterAssignment(std::move(l));
    }

    /// Relabels so that sample 0 is in cluster 0.
    [[nodiscard]] ClusterAssignment canonical() const { return labels_.front() == 0 ? *this : swapped(); }

    friend bool operator==(const ClusterAssignment& a, const ClusterAssignment& b) { return a.labels_ == b.labels_; }

private:
    std::vector<int> labels_;
    std::array<std::size_t, 2> sizes_{0, 0};
};

/// The rows of `values` belonging to cluster `k`.
inline Matrix cluster_rows(const Matrix& values, const ClusterAssignment& a, int k) {
    const auto idx = a.members(k);
    Matrix out(static_cast<Eigen::Index>(idx.size()), values.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = values.row(static_cast<Eigen::Index>(idx[r]));
    return out;
}

struct ClusterModel {
    ClusterAssignment assignment;
    Matrix centroids;        // 2 x m, row k = mean of cluster k
    double objective = 0.0;  // within-cluster sum of squares
};

/// Centroids and within-cluster sum of squares of a flat assignment.
inline ClusterModel model_from_assignment(const Matrix& values, ClusterAssignment assignment) {
    ClusterModel model;
    model.centroids = Matrix::Zero(2, values.cols());
    for (std::size_t i = 0; i < assignment.size(); ++i)
        model.centroids.row(assignment.label(i)) += values.row(static_cast<Eigen::Index>(i));
    for (int k = 0; k < 2; ++k) model.centroids.row(k) /= static_cast<double>(assignment.cluster_size(k));
    double sse = 0.0;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        sse += (values.row(static_cast<Eigen::Index>(i)) - model.centroids.row(assignment.label(i))).squaredNorm();
    model.objective = sse;
    model.assignment = std::move(assignment);
    return model;
}

// ---------------------------------------------------------------------------
// K-Means
// ---------------------------------------------------------------------------

struct KMeansOptions {
    std::uint64_t seed = 0;
    int max_iter = 300;
    int restarts = 10;
};

/// One Lloyd run, with the objective recorded after every update step.
struct LloydRun {
    std::vector<int> labels;
    Matrix centroids;
    std::vector<double> objective_trace;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

/// Nearest-centroid label; ties go to the lower cluster index.
inline int nearest_centroid(const Matrix& values, Eigen::Index i, const Matrix& centroids) {
    const double d0 = (values.row(i) - centroids.row(0)).squaredNorm();
    const double d1 = (values.row(i) - centroids.row(1)).squaredNorm();
    return d1 < d0 ? 1 : 0;
}

inline Matrix means_of(const Matrix& values, const std::vector<int>& labels, std::array<std::size_t, 2>& sizes) {
    Matrix c = Matrix::Zero(2, values.cols());
    sizes = {0, 0};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        c.row(labels[i]) += values.row(static_cast<Eigen::Index>(i));
        ++sizes[static_cast<std::size_t>(labels[i])];
    }
    for (int k = 0; k < 2; ++k)
        if (sizes[static_cast<std::size_t>(k)] > 0) c.row(k) /= static_cast<double>(sizes[static_cast<std::size_t>(k)]);
    return c;
}

inline double sse_of(const Matrix& values, const std::vector<int>& labels, const Matrix& centroids) {
    double s = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        s += (values.row(static_cast<Eigen::Index>(i)) - centroids.row(labels[i])).squaredNorm();
    return s;
}

/// k-means++ seeding for k = 2.
inline Matrix kmeanspp_seed(const Matrix& values, std::mt19937_64& rng) {
    const Eigen::Index n = values.rows();
    Matrix c(2, values.cols());
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    const Eigen::Index first = pick(rng);
    c.row(0) = values.row(first);
    std::vector<double> d2(static_cast<std::size_t>(n));
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        d2[static_cast<std::size_t>(i)] = (values.row(i) - c.row(0)).squaredNorm();
        total += d2[static_cast<std::size_t>(i)];
    }
    Eigen::Index second = first;
    if (total > 0.0) {
        std::uniform_real_distribution<double> u(0.0, total);
        const double r = u(rng);
        double acc = 0.0;
        second = n - 1;
        for (Eigen::Index i = 0; i < n; ++i) {
            acc += d2[static_cast<std::size_t>(i)];
            if (acc > r && d2[static_cast<std::size_t>(i)] > 0.0) {
                second = i;
                break;
            }
        }
    } else {
        second = (first + 1) % n;
    }
    c.row(1) = values.row(second);
    return c;
}

}  // namespace detail

/// Lloyd iteration from the given initial centroids.
///
/// An empty cluster is repaired by moving the point farthest from its own
/// centroid into it, which keeps both clusters populated and never increases
/// the objective.
inline LloydRun lloyd(const Matrix& values, Matrix centroids, int max_iter) {
    const auto n = static_cast<std::size_t>(values.rows());
    LloydRun run;
    run.labels.assign(n, -1);
    std::array<std::size_t, 2> sizes{};
    for (int it = 0; it < max_iter; ++it) {
        std::vector<int> next(n);
        for (std::size_t i = 0; i < n; ++i) next[i] = detail::nearest_centroid(values, static_cast<Eigen::Index>(i), centroids);
        const bool changed = next != run.labels;
        run.labels = std::move(next);
        Matrix updated = detail::means_of(values, run.labels, sizes);
        for (int k = 0; k < 2; ++k) {
            if (sizes[static_cast<std::size_t>(k)] != 0) continue;
            const int other = 1 - k;
            std::size_t far = 0;
            double best = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = (values.row(static_cast<Eigen::Index>(i)) - updated.row(other)).squaredNorm();
                if (d > best) {
                    best = d;
                    far = i;
                }
            }
            run.labels[far] = k;
            updated = detail::means_of(values, run.labels, sizes);
        }
        centroids = std::move(updated);
        run.objective_trace.push_back(detail::sse_of(values, run.labels, centroids));
        run.iterations = it + 1;
        if (!changed) {
            run.converged = true;
            break;
        }
    }
    run.centroids = std::move(centroids);
    return run;
}

/// Lloyd's K-Means with k-means++ seeding and `restarts` independent starts.
///
/// The run with the lowest objective wins; ties go to the lowest restart
/// index. Restart r draws from a generator seeded with (seed, r), so the
/// result depends only on the data and `opts`.
inline ClusterModel kmeans(const Dataset& data, const KMeansOptions& opts = {}) {
    if (opts.restarts < 1) throw ConfigError("kmeans: restarts must be >= 1");
    if (opts.max_iter < 1) throw ConfigError("kmeans: max_iter must be >= 1");
    const Matrix& x = data.values();
    LloydRun best;
    double best_obj = std::numeric_limits<double>::infinity();
    for (int r = 0; r < opts.restarts; ++r) {
        std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                          static_cast<std::uint32_t>(r)};
        std::mt19937_64 rng(seq);
        LloydRun run = lloyd(x, detail::kmeanspp_seed(x, rng), opts.max_iter);
        const double obj = run.objective_trace.back();
        if (obj < best_obj) {
            best_obj = obj;
            best = std::move(run);
        }
    }
    return model_from_assignment(x, ClusterAssignment(best.labels).canonical());
}

// ---------------------------------------------------------------------------
// Ward
// ---------------------------------------------------------------------------

/// Ward agglomeration from singletons, cut at two clusters.
///
/// Dissimilarities start as squared Euclidean distances and are maintained
/// with the Lance-Williams recurrence for Ward's criterion, which keeps
/// d(A,B) = 2 |A||B| / (|A|+|B|) * ||mean(A) - mean(B)||^2. A merged cluster
/// keeps the slot of its smaller member index, so slot i always holds the
/// cluster whose minimum original index is i; scanning pairs in slot order
/// and accepting only strict improvements merges the lexicographically
/// smallest pair among equal-cost candidates.
inline ClusterModel ward(const Dataset& data) {
    const Matrix& x = data.values();
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).squaredNorm();
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    std::vector<std::size_t> size(n, 1);
    std::vector<std::size_t> parent(n);
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    std::vector<std::size_t> active(n);
    for (std::size_t i = 0; i < n; ++i) active[i] = i;

    while (active.size() > 2) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t ba = 0;
        std::size_t bb = 1;
        for (std::size_t p = 0; p < active.size(); ++p) {
            const std::size_t a = active[p];
            const double* row = &d[a * n];
            for (std::size_t q = p + 1; q < active.size(); ++q) {
                const double v = row[active[q]];
                if (v < best) {
                    best = v;
                    ba = p;
                    bb = q;
                }
            }
        }
        const std::size_t a = active[ba];
        const std::size_t b = active[bb];
        const double na = static_cast<double>(size[a]);
        const double nb = static_cast<double>(size[b]);
        const double dab = d[a * n + b];
        for (const std::size_t k : active) {
            if (k == a || k == b) continue;
            const double nk = static_cast<double>(size[k]);
            const double v = ((na + nk) * d[k * n + a] + (nb + nk) * d[k * n + b] - nk * dab) / (na + nb + nk);
            d[a * n + k] = v;
            d[k * n + a] = v;
        }
        size[a] += size[b];
        parent[b] = a;
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bb));
    }

    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = i;
        while (parent[r] != r) r = parent[r];
        labels[i] = (r == active[0]) ? 0 : 1;
    }
    return model_from_assignment(x, ClusterAssignment(std::move(labels)).canonical());
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

enum class Backend { kmeans, ward };

inline Backend parse_backend(std::string_view name) {
    if (name == "kmeans") return Backend::kmeans;
    if (name == "ward") return Backend::ward;
    throw ConfigError("unknown clustering backend '" + std::string(name) + "' (expected kmeans or ward)");
}

inline std::string to_string(Backend b) { return b == Backend::kmeans ? "kmeans" : "ward"; }

/// The opaque clustering function C: X -> Y handed to the attack.
using ClusteringFunction = std::function<ClusterModel(const Dataset&)>;

inline ClusterModel cluster(const Dataset& data, Backend backend, std::uint64_t seed) {
    switch (backend) {
        case Backend::kmeans: return kmeans(data, KMeansOptions{seed});
        case Backend::ward: return ward(data);
    }
    throw ConfigError("unhandled backend");
}

inline ClusteringFunction make_clusterer(Backend backend, std::uint64_t seed) {
    return [backend, seed](const Dataset& d) { return cluster(d, backend, seed); };
}

}  // namespace spillover
