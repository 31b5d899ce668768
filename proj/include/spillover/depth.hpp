#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "spillover/clustering.hpp"
#include "spillover/dataset.hpp"
#include "spillover/error.hpp"

namespace spillover {

/// Sample mean and unbiased (n-1) covariance of the rows of `values`.
struct SampleMoments {
    Vector mean;
    Matrix covariance;

    static SampleMoments of(const Matrix& values) {
        if (values.rows() < 2) throw NumericalError("covariance needs at least 2 samples");
        SampleMoments s;
        s.mean = values.colwise().mean().transpose();
        const Matrix centered = values.rowwise() - s.mean.transpose();
        s.covariance = (centered.transpose() * centered) / static_cast<double>(values.rows() - 1);
        return s;
    }
};

/// Precomputed Mahalanobis depth with respect to one reference sample.
///
/// Depth is (1 + (x - mean)^T S^-1 (x - mean))^-1 with S the unbiased sample
/// covariance. A singular S is rejected: for high-dimensional data use the
/// coordinate-wise measure (comd) instead.
class MahalanobisDepth {
public:
    explicit MahalanobisDepth(const Matrix& reference) {
        if (reference.rows() <= reference.cols())
            throw NumericalError("Mahalanobis depth needs n > m; use the coordinate-wise depth (COMD) instead");
        const auto moments = SampleMoments::of(reference);
        mean_ = moments.mean;
        llt_.compute(moments.covariance);
        const double max_diag = moments.covariance.diagonal().maxCoeff();
        bool ok = llt_.info() == Eigen::Success && max_diag > 0.0;
        if (ok) {
            const auto l = llt_.matrixL();
            const Vector diag = Matrix(l).diagonal();
            const double ratio = diag.minCoeff() / diag.maxCoeff();
            ok = ratio * ratio > 1e-12;
        }
        if (!ok)
            throw NumericalError("sample covariance is singular; use the coordinate-wise depth (COMD) instead");
    }

    [[nodiscard]] double squared_distance(const Vector& x) const {
        const Vector diff = x - mean_;
        const Vector z = llt_.matrixL().solve(diff);
        return z.squaredNorm();
    }

    [[nodiscard]] double operator()(const Vector& x) const { return 1.0 / (1.0 + squared_distance(x)); }

    [[nodiscard]] const Vector& mean() const noexcept { return mean_; }

private:
    Vector mean_;
    Eigen::LLT<Matrix> llt_;
};

inline double mahalanobis_depth(const Vector& x, const Matrix& reference) { return MahalanobisDepth(reference)(x); }

inline double mahalanobis_depth(const Vector& x, const Dataset& reference) {
    return mahalanobis_depth(x, reference.values());
}

/// Mahalanobis depth for clusters: the sum of the per-cluster depths.
inline double mdc(const Vector& x, const std::vector<Matrix>& clusters) {
    if (clusters.empty()) throw ConfigError("mdc: no clusters given");
    double total = 0.0;
    for (const auto& c : clusters) total += mahalanobis_depth(x, c);
    return total;
}

/// Coordinate-wise min-Mahalanobis depth against a fixed clustering.
///
/// For coordinate i the depth of scalar x_i is the sum over clusters of
/// (1 + (x_i - mu_ci)^2 / var_ci)^-1; the COMD is the minimum over
/// coordinates. A coordinate where some cluster has zero variance carries no
/// outlyingness signal and is skipped (it never attains the minimum).
class ComdModel {
public:
    ComdModel(const Matrix& values, const ClusterAssignment& assignment) {
        if (static_cast<std::size_t>(values.rows()) != assignment.size())
            throw DataError("comd: assignment size does not match dataset");
        const auto m = values.cols();
        for (int k = 0; k < 2; ++k) {
            const Matrix rows = cluster_rows(values, assignment, k);
            means_[k] = rows.colwise().mean().transpose();
            vars_[k] = Vector::Zero(m);
            if (rows.rows() > 1) {
                for (Eigen::Index j = 0; j < m; ++j)
                    vars_[k](j) = (rows.col(j).array() - means_[k](j)).square().sum() / static_cast<double>(rows.rows() - 1);
            }
        }
        for (Eigen::Index j = 0; j < m; ++j) {
            if (vars_[0](j) > 0.0 && vars_[1](j) > 0.0)
                active_.push_back(j);
            else
                skipped_.push_back(j);
        }
        if (active_.empty()) throw NumericalError("comd: every coordinate has zero variance in some cluster");
    }

    /// Depth of scalar `v` in coordinate `j` (the per-coordinate MDC).
    [[nodiscard]] double coordinate_depth(Eigen::Index j, double v) const {
        double s = 0.0;
        for (int k = 0; k < 2; ++k) {
            const double d = v - means_[k](j);
            s += 1.0 / (1.0 + d * d / vars_[k](j));
        }
        return s;
    }

    [[nodiscard]] bool is_skipped(Eigen::Index j) const {
        return std::find(skipped_.begin(), skipped_.end(), j) != skipped_.end();
    }

    [[nodiscard]] double operator()(const Vector& x) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto j : active_) best = std::min(best, coordinate_depth(j, x(j)));
        return best;
    }

    [[nodiscard]] const std::vector<Eigen::Index>& skipped_coordinates() const noexcept { return skipped_; }

private:
    std::array<Vector, 2> means_;
    std::array<Vector, 2> vars_;
    std::vector<Eigen::Index> active_;
    std::vector<Eigen::Index> skipped_;
};

inline double comd(const Vector& x, const Dataset& data, const ClusterAssignment& assignment) {
    return ComdModel(data.values(), assignment)(x);
}

/// Per-sample COMD over a dataset with the empirical quantile convention
/// quantile_of(v) = #{samples with COMD <= v} / n.
class DepthReport {
public:
    DepthReport(const Dataset& data, const ClusterAssignment& assignment) : model_(data.values(), assignment) {
        per_sample_.resize(data.rows());
        for (std::size_t i = 0; i < data.rows(); ++i) per_sample_[i] = model_(data.row(i));
        sorted_ = per_sample_;
        std::sort(sorted_.begin(), sorted_.end());
    }

    [[nodiscard]] const std::vector<double>& per_sample_comd() const noexcept { return per_sample_; }
    [[nodiscard]] const ComdModel& model() const noexcept { return model_; }

    [[nodiscard]] double quantile_of(double v) const {
        const auto count = std::upper_bound(sorted_.begin(), sorted_.end(), v) - sorted_.begin();
        return static_cast<double>(count) / static_cast<double>(sorted_.size());
    }

    /// Smallest sample COMD whose quantile is >= q, so that
    /// quantile_of(v) >= q exactly when v >= floor_value(q).
    [[nodiscard]] double floor_value(double q) const {
        if (!(q > 0.0 && q <= 1.0)) throw ConfigError("depth floor quantile must lie in (0, 1]");
        const auto n = static_cast<double>(sorted_.size());
        auto k = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
        k = std::clamp<std::size_t>(k, 1, sorted_.size());
        return sorted_[k - 1];
    }

private:
    ComdModel model_;
    std::vector<double> per_sample_;
    std::vector<double> sorted_;
};

/// Axis-aligned feasible region [-delta_j, delta_j] for the additive perturbation.
struct PerturbationBox {
    Vector delta;

    [[nodiscard]] Eigen::Index dim() const noexcept { return delta.size(); }
    [[nodiscard]] bool contains(const Vector& eps) const {
        return eps.size() == delta.size() && (eps.array().abs() <= delta.array()).all();
    }
    [[nodiscard]] bool degenerate() const { return (delta.array() == 0.0).all(); }
};

struct DeltaSelectionOptions {
    double floor_quantile = 0.1;
    std::optional<Vector> budget_cap;
    double max_multiplier = 10.0;
    int bisection_steps = 20;
};

/// Chooses the perturbation box for target row `target`.
///
/// The box is s * (per-feature standard deviation of X). The multiplier s is
/// bisected on [0, max_multiplier]; a candidate s is accepted when all 2m
/// axis-extreme probes x_t +/- s*sd_j*e_j keep COMD at or above the
/// floor_quantile value of the dataset's COMD distribution. A floor of 1.0
/// admits no perturbation at all and yields the zero box.
inline PerturbationBox select_delta(const Dataset& data, const ClusterAssignment& assignment, std::size_t target,
                                    const DeltaSelectionOptions& opts = {}) {
    if (target >= data.rows()) throw ConfigError("select_delta: target index out of range");
    if (!(opts.floor_quantile > 0.0 && opts.floor_quantile <= 1.0))
        throw ConfigError("select_delta: floor quantile must lie in (0, 1]");
    const auto m = static_cast<Eigen::Index>(data.cols());
    if (opts.budget_cap && opts.budget_cap->size() != m) throw ConfigError("select_delta: budget cap has wrong dimension");

    PerturbationBox box{Vector::Zero(m)};
    if (opts.floor_quantile >= 1.0) return box;

    const DepthReport report(data, assignment);
    const double floor = report.floor_value(opts.floor_quantile);
    const Vector xt = data.row(target);
    if (report.model()(xt) < floor)
        throw AttackAborted("target sample is already below the depth floor (near-outlying); attack aborted");

    const Vector scale = column_stddev(data.values());
    const auto& model = report.model();
    // COMD is a min over per-coordinate terms, so an axis probe only changes
    // the term of its own coordinate.
    const auto feasible = [&](double s) {
        for (Eigen::Index j = 0; j < m; ++j) {
            if (scale(j) == 0.0 || model.is_skipped(j)) continue;
            for (const double sign : {-1.0, 1.0}) {
                Vector probe = xt;
                probe(j) += sign * s * scale(j);
                if (model(probe) < floor) return false;
            }
        }
        return true;
    };

    double lo = 0.0;
    double hi = opts.max_multiplier;
    if (feasible(hi)) {
        lo = hi;
    } else {
        for (int it = 0; it < opts.bisection_steps; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (feasible(mid))
                lo = mid;
            else
                hi = mid;
        }
    }
    box.delta = lo * scale;
    if (opts.budget_cap) box.delta = box.delta.cwiseMin(opts.budget_cap->cwiseMax(0.0));
    return box;
}

}  // namespace spillover
