#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spillover/dataset.hpp"
#include "spillover/depth.hpp"
#include "spillover/error.hpp"

namespace spillover {

using Objective = std::function<double(const Vector&)>;

struct OptimBudget {
    int total_evals = 60;
    int init_evals = 20;
    std::uint64_t seed = 0;

    /// init = max(2(m+1), 20); total = 30m capped at 3000 (and kept above init).
    static OptimBudget defaults_for(Eigen::Index m, std::uint64_t seed = 0) {
        OptimBudget b;
        b.init_evals = std::max<int>(2 * (static_cast<int>(m) + 1), 20);
        b.total_evals = std::min<int>(30 * static_cast<int>(m), 3000);
        if (b.total_evals <= b.init_evals) b.total_evals = b.init_evals + 1;
        b.seed = seed;
        return b;
    }

    void validate(Eigen::Index m) const {
        if (init_evals < static_cast<int>(m) + 1)
            throw ConfigError("budget: init_evals must be >= m+1 (" + std::to_string(m + 1) + ")");
        if (total_evals <= init_evals) throw ConfigError("budget: total_evals must exceed init_evals");
    }
};

struct EvalRecord {
    Vector point;
    double value = 0.0;
    double best_so_far = 0.0;
    double beta = -1.0;  // distance factor used to pick the point; -1 for the initial design
};

struct OptimResult {
    Vector best_point;
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<EvalRecord> trace;
};

namespace detail {

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

/// count x dim Latin hypercube in [-1, 1]^dim.
inline Matrix latin_hypercube_unit(int count, Eigen::Index dim, std::mt19937_64& rng) {
    Matrix pts(count, dim);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<int> perm(static_cast<std::size_t>(count));
    const double width = 2.0 / count;
    for (Eigen::Index j = 0; j < dim; ++j) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int i = 0; i < count; ++i) {
            const double v = -1.0 + (perm[static_cast<std::size_t>(i)] + u(rng)) * width;
            pts(i, j) = std::min(v, 1.0);
        }
    }
    return pts;
}

/// Coordinates with a non-zero half-width; the others are pinned at 0.
inline std::vector<Eigen::Index> free_dims(const PerturbationBox& box) {
    std::vector<Eigen::Index> out;
    for (Eigen::Index j = 0; j < box.delta.size(); ++j)
        if (box.delta(j) > 0.0) out.push_back(j);
    return out;
}

/// Maps a point of the free-dimension unit cube back into the box, clipping exactly.
inline Vector to_box(const Vector& u, const PerturbationBox& box, const std::vector<Eigen::Index>& dims) {
    Vector eps = Vector::Zero(box.delta.size());
    for (std::size_t k = 0; k < dims.size(); ++k) {
        const auto j = dims[k];
        eps(j) = std::clamp(u(static_cast<Eigen::Index>(k)) * box.delta(j), -box.delta(j), box.delta(j));
    }
    return eps;
}

inline void record(OptimResult& res, Vector eps, double value, double beta) {
    if (value < res.best_value || res.trace.empty()) {
        res.best_value = value;
        res.best_point = eps;
    }
    res.trace.push_back(EvalRecord{std::move(eps), value, res.best_value, beta});
}

/// A box with no free coordinate has exactly one feasible point.
inline OptimResult evaluate_origin_only(const Objective& f, const PerturbationBox& box, int total) {
    OptimResult res;
    const Vector zero = Vector::Zero(box.delta.size());
    for (int i = 0; i < total; ++i) record(res, zero, f(zero), -1.0);
    return res;
}

}  // namespace detail

/// `count` points stratified in every coordinate of the box: along coordinate
/// j, each of the `count` equal-width slices of [-delta_j, delta_j] holds
/// exactly one point.
inline std::vector<Vector> latin_hypercube(int count, const PerturbationBox& box, std::uint64_t seed) {
    if (count < 1) throw ConfigError("latin_hypercube: count must be >= 1");
    auto rng = detail::make_rng(seed, 0);
    const Matrix unit = detail::latin_hypercube_unit(count, box.delta.size(), rng);
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Vector p(box.delta.size());
        for (Eigen::Index j = 0; j < p.size(); ++j) p(j) = std::clamp(unit(i, j) * box.delta(j), -box.delta(j), box.delta(j));
        out.push_back(std::move(p));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cubic RBF surrogate
// ---------------------------------------------------------------------------

/// s(x) = sum_i w_i ||x - c_i||^3 + a_0 + a^T x
struct SurrogateModel {
    Matrix centers;  // N x d
    Vector weights;  // N
    Vector tail;     // d + 1: constant term first

    [[nodiscard]] double operator()(const Vector& x) const {
        double s = tail(0) + tail.tail(tail.size() - 1).dot(x);
        for (Eigen::Index i = 0; i < centers.rows(); ++i) {
            const double r = (centers.row(i).transpose() - x).norm();
            s += weights(i) * r * r * r;
        }
        return s;
    }

    /// Same as operator() given precomputed squared distances to the centers.
    [[nodiscard]] double from_squared_distances(const Vector& x, const Vector& r2) const {
        double s = tail(0) + tail.tail(tail.size() - 1).dot(x);
        for (Eigen::Index i = 0; i < r2.size(); ++i) {
            const double r = std::sqrt(std::max(r2(i), 0.0));
            s += weights(i) * r * r * r;
        }
        return s;
    }
};

/// Fits the cubic RBF interpolant with a linear tail by solving
///   [Phi P; P^T 0] [w; a] = [f; 0],  Phi_ij = ||x_i - x_j||^3, P = [1 X].
inline SurrogateModel fit_cubic_rbf(const Matrix& points, const Vector& values) {
    const Eigen::Index n = points.rows();
    const Eigen::Index d = points.cols();
    if (values.size() != n) throw ConfigError("fit_cubic_rbf: points and values differ in length");
    if (n < d + 1) throw NumericalError("fit_cubic_rbf: need at least m+1 points for the linear tail");

    Matrix phi(n, n);
    const double scale = std::max(1.0, points.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < n; ++i) {
        phi(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double r = (points.row(i) - points.row(j)).norm();
            if (r <= 1e-12 * scale)
                throw NumericalError("fit_cubic_rbf: duplicate points " + std::to_string(i) + " and " + std::to_string(j));
            phi(i, j) = phi(j, i) = r * r * r;
        }
    }
    Matrix p(n, d + 1);
    p.col(0).setOnes();
    p.rightCols(d) = points;
    Eigen::ColPivHouseholderQR<Matrix> tail_qr(p);
    tail_qr.setThreshold(1e-10);
    if (tail_qr.rank() < d + 1) throw NumericalError("fit_cubic_rbf: points are not affinely independent");

    Matrix a = Matrix::Zero(n + d + 1, n + d + 1);
    a.topLeftCorner(n, n) = phi;
    a.topRightCorner(n, d + 1) = p;
    a.bottomLeftCorner(d + 1, n) = p.transpose();
    Vector rhs = Vector::Zero(n + d + 1);
    rhs.head(n) = values;
    const Vector sol = a.partialPivLu().solve(rhs);
    if (!sol.allFinite()) throw NumericalError("fit_cubic_rbf: interpolation system is singular");

    SurrogateModel model{points, sol.head(n), sol.tail(d + 1)};
    const Vector fitted = phi * model.weights + p * model.tail;
    const double tol = 1e-6 * std::max(1.0, values.cwiseAbs().maxCoeff());
    if ((fitted - values).cwiseAbs().maxCoeff() > tol)
        throw NumericalError("fit_cubic_rbf: interpolation system is ill-conditioned");
    return model;
}

// ---------------------------------------------------------------------------
// CORS
// ---------------------------------------------------------------------------

struct CorsOptions {
    std::vector<double> beta_cycle{0.9, 0.75, 0.25, 0.05, 0.03, 0.0};
    int inner_starts = 32;
    int inner_iterations = 200;
    double inner_initial_step = 0.25;
    std::function<void(const EvalRecord&, int)> on_eval;  // optional progress hook
};

namespace detail {

struct InnerCandidate {
    Vector point;
    double value = std::numeric_limits<double>::infinity();
    double min_dist2 = 0.0;
};

/// Multi-start compass search on the surrogate subject to staying at least
/// `min_dist` away from every center. Each iteration polls one coordinate
/// (cycling) in both directions; the step halves after a full sweep without
/// improvement. Squared distances to the centers are updated per coordinate
/// so a poll costs O(N).
inline std::optional<InnerCandidate> minimize_surrogate(const SurrogateModel& s, double min_dist, const CorsOptions& opts,
                                                        std::mt19937_64& rng) {
    const Eigen::Index d = s.centers.cols();
    const Eigen::Index n = s.centers.rows();
    const double min_d2 = min_dist * min_dist;
    const Matrix starts = latin_hypercube_unit(opts.inner_starts, d, rng);
    std::optional<InnerCandidate> best;
    Vector r2(n);
    Vector trial(n);
    for (Eigen::Index st = 0; st < starts.rows(); ++st) {
        Vector u = starts.row(st).transpose();
        for (Eigen::Index i = 0; i < n; ++i) r2(i) = (s.centers.row(i).transpose() - u).squaredNorm();
        if (r2.minCoeff() < min_d2) continue;
        double val = s.from_squared_distances(u, r2);
        double step = opts.inner_initial_step;
        Eigen::Index fails = 0;
        for (int it = 0; it < opts.inner_iterations; ++it) {
            const Eigen::Index j = it % d;
            bool improved = false;
            for (const double dir : {1.0, -1.0}) {
                const double nv = std::clamp(u(j) + dir * step, -1.0, 1.0);
                if (nv == u(j)) continue;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double c = s.centers(i, j);
                    trial(i) = r2(i) + (nv - c) * (nv - c) - (u(j) - c) * (u(j) - c);
                }
                if (trial.minCoeff() < min_d2) continue;
                const double old = u(j);
                u(j) = nv;
                const double tv = s.from_squared_distances(u, trial);
                if (tv < val) {
                    val = tv;
                    r2.swap(trial);
                    improved = true;
                    break;
                }
                u(j) = old;
            }
            if (improved) {
                fails = 0;
            } else if (++fails >= d) {
                step *= 0.5;
                fails = 0;
            }
        }
        for (Eigen::Index i = 0; i < n; ++i) r2(i) = (s.centers.row(i).transpose() - u).squaredNorm();
        const double md2 = r2.minCoeff();
        if (md2 < min_d2) continue;
        const bool better = !best || val < best->value - 1e-12 * (1.0 + std::abs(val)) ||
                            (std::abs(val - best->value) <= 1e-12 * (1.0 + std::abs(val)) && md2 > best->min_dist2);
        if (better) best = InnerCandidate{u, val, md2};
    }
    return best;
}

/// Moves a candidate that coincides with an evaluated point onto stratum
/// midpoints (strata = `strata` equal slices of [-1, 1]) until it is distinct.
inline Vector separate_from(const Vector& cand, const Matrix& evaluated, int strata) {
    const auto too_close = [&](const Vector& v) {
        for (Eigen::Index i = 0; i < evaluated.rows(); ++i)
            if ((evaluated.row(i).transpose() - v).norm() <= 1e-12) return true;
        return false;
    };
    if (!too_close(cand)) return cand;
    const double w = 2.0 / strata;
    const auto stratum_of = [&](double v) { return std::clamp(static_cast<int>(std::floor((v + 1.0) / w)), 0, strata - 1); };
    const auto mid = [&](int k) { return -1.0 + (k + 0.5) * w; };
    Vector v = cand;
    for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = mid(stratum_of(v(j)));
    if (!too_close(v)) return v;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        const int k = stratum_of(v(j));
        for (const int nk : {k + 1, k - 1}) {
            if (nk < 0 || nk >= strata) continue;
            Vector t = v;
            t(j) = mid(nk);
            if (!too_close(t)) return t;
        }
    }
    return v;
}

}  // namespace detail

/// Surrogate-based minimization over the box (CORS with a cubic RBF).
///
/// The search runs in the unit cube of the coordinates with non-zero width;
/// pinned coordinates stay at 0. After an initial Latin hypercube design,
/// every step fits the surrogate to all evaluations and evaluates its
/// minimizer subject to keeping distance beta * D from every evaluated point,
/// where D is the diagonal of the unit cube and beta walks the cycle. When no
/// candidate satisfies the current beta, the next beta is tried without
/// consuming an evaluation. Exactly total_evals evaluations are made.
inline OptimResult cors_minimize(const Objective& f, const PerturbationBox& box, const OptimBudget& budget,
                                 const CorsOptions& opts = {}) {
    const auto dims = detail::free_dims(box);
    if (dims.empty()) return detail::evaluate_origin_only(f, box, budget.total_evals);
    const auto k = static_cast<Eigen::Index>(dims.size());
    budget.validate(k);
    if (opts.beta_cycle.empty()) throw ConfigError("cors: empty beta cycle");

    OptimResult res;
    Matrix unit_pts(budget.total_evals, k);
    Vector values(budget.total_evals);
    int count = 0;
    const auto evaluate = [&](const Vector& u, double beta) {
        const Vector eps = detail::to_box(u, box, dims);
        const double v = f(eps);
        if (!std::isfinite(v)) throw NumericalError("objective returned a non-finite value");
        unit_pts.row(count) = u.transpose();
        values(count) = v;
        ++count;
        detail::record(res, eps, v, beta);
        if (opts.on_eval) opts.on_eval(res.trace.back(), count);
    };

    auto rng = detail::make_rng(budget.seed, 0);
    const Matrix init = detail::latin_hypercube_unit(budget.init_evals, k, rng);
    for (Eigen::Index i = 0; i < init.rows(); ++i) evaluate(init.row(i).transpose(), -1.0);

    const double diag = 2.0 * std::sqrt(static_cast<double>(k));
    std::size_t beta_pos = 0;
    std::uint64_t step = 0;
    while (count < budget.total_evals) {
        ++step;
        auto inner_rng = detail::make_rng(budget.seed, step);
        const Matrix pts = unit_pts.topRows(count);
        std::optional<SurrogateModel> surrogate;
        try {
            surrogate = fit_cubic_rbf(pts, values.head(count));
        } catch (const NumericalError&) {
            surrogate.reset();
        }
        Vector candidate;
        double used_beta = 0.0;
        if (surrogate) {
            for (std::size_t tries = 0; tries < opts.beta_cycle.size(); ++tries) {
                const double beta = opts.beta_cycle[beta_pos % opts.beta_cycle.size()];
                ++beta_pos;
                auto found = detail::minimize_surrogate(*surrogate, beta * diag, opts, inner_rng);
                if (found) {
                    candidate = found->point;
                    used_beta = beta;
                    break;
                }
            }
        }
        if (candidate.size() == 0) {
            // No usable surrogate: take the most isolated of a fresh design.
            const Matrix pool = detail::latin_hypercube_unit(opts.inner_starts, k, inner_rng);
            double far = -1.0;
            for (Eigen::Index i = 0; i < pool.rows(); ++i) {
                double md = std::numeric_limits<double>::infinity();
                for (Eigen::Index e = 0; e < count; ++e) md = std::min(md, (pts.row(e) - pool.row(i)).squaredNorm());
                if (md > far) {
                    far = md;
                    candidate = pool.row(i).transpose();
                }
            }
            used_beta = -1.0;
        }
        evaluate(detail::separate_from(candidate, pts, budget.total_evals), used_beta);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Simulated annealing (comparison baseline)
// ---------------------------------------------------------------------------

struct AnnealOptions {
    double initial_temperature = 1.0;
    double final_temperature_ratio = 1e-3;
    double initial_step = 0.3;  // proposal std as a fraction of the unit-cube half-width
    double min_step = 0.01;
};

/// Simulated annealing with geometric cooling and Gaussian proposals clipped
/// to the box. Starts at the box center; makes exactly total_evals evaluations.
inline OptimResult anneal_minimize(const Objective& f, const PerturbationBox& box, const OptimBudget& budget,
                                   const AnnealOptions& opts = {}) {
    const auto dims = detail::free_dims(box);
    if (dims.empty()) return detail::evaluate_origin_only(f, box, budget.total_evals);
    if (budget.total_evals < 1) throw ConfigError("anneal: total_evals must be >= 1");
    const auto k = static_cast<Eigen::Index>(dims.size());

    OptimResult res;
    auto rng = detail::make_rng(budget.seed, 0xA11EA1ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Vector cur = Vector::Zero(k);
    double cur_val = f(detail::to_box(cur, box, dims));
    detail::record(res, detail::to_box(cur, box, dims), cur_val, -1.0);
    const int steps = std::max(1, budget.total_evals - 1);
    const double cooling = std::pow(opts.final_temperature_ratio, 1.0 / steps);
    double temp = opts.initial_temperature;
    for (int i = 1; i < budget.total_evals; ++i) {
        const double frac = temp / opts.initial_temperature;
        const double sigma = std::max(opts.min_step, opts.initial_step * std::sqrt(frac));
        Vector prop = cur;
        for (Eigen::Index j = 0; j < k; ++j) prop(j) = std::clamp(prop(j) + sigma * normal(rng), -1.0, 1.0);
        const Vector eps = detail::to_box(prop, box, dims);
        const double v = f(eps);
        detail::record(res, eps, v, -1.0);
        if (v <= cur_val || unif(rng) < std::exp(-(v - cur_val) / temp)) {
            cur = prop;
            cur_val = v;
        }
        temp *= cooling;
    }
    return res;
}

}  // namespace spillover
