#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spillover/attack.hpp"
#include "spillover/clustering.hpp"
#include "spillover/dataset.hpp"
#include "spillover/error.hpp"

namespace spillover {

// ---------------------------------------------------------------------------
// Constructive spill-over for K-Means
// ---------------------------------------------------------------------------

struct Theorem1Candidate {
    std::size_t index = 0;
    double alpha = 0.0;      // ||y - c2||^2 - ||y - c1||^2
    double bound = 0.0;      // ||c1 - c1'||^2 + 2 <y - c1, c1 - c1'>
    double alignment = 0.0;  // <x - c1, y - c1>
    bool predicted = false;  // alpha <= bound and alignment >= 0
};

struct Theorem1Certificate {
    std::size_t target = 0;
    int source = 0;
    std::size_t source_size = 0;  // n1
    double target_alignment = 0.0;  // <x - c1, c2 - c1>
    Vector target_point;
    Vector c1;
    Vector c2;
    Vector shifted_center;  // c1' = (n1 c1 - x) / (n1 - 1)
    Vector center_shift;    // c1 - c1' = (x - c1) / (n1 - 1)
    std::vector<Theorem1Candidate> candidates;
    std::vector<std::size_t> predicted_spill;
    ClusterAssignment assignment;
};

/// Builds the certificate for moving the source-cluster point x with the
/// largest <x - c1, c2 - c1> onto c2, every other source point being a
/// candidate y. A predicted y satisfies ||y - c1'||^2 >= ||y - c2||^2.
inline Theorem1Certificate theorem1_certify(const Dataset& data, const ClusterModel& model, int source = 0) {
    if (source != 0 && source != 1) throw ConfigError("theorem1: source cluster must be 0 or 1");
    const auto n1 = model.assignment.cluster_size(source);
    if (n1 < 2) throw DataError("theorem1: source cluster needs at least 2 samples");

    Theorem1Certificate cert;
    cert.source = source;
    cert.source_size = n1;
    cert.assignment = model.assignment;
    cert.c1 = model.centroids.row(source).transpose();
    cert.c2 = model.centroids.row(1 - source).transpose();
    const Vector axis = cert.c2 - cert.c1;

    const auto members = model.assignment.members(source);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto i : members) {
        const double a = (data.row(i) - cert.c1).dot(axis);
        if (a > best) {
            best = a;
            cert.target = i;
        }
    }
    if (!(best >= 0.0))
        throw DataError("theorem1: no source point forms an acute angle with c2 - c1 (degenerate clusters)");
    cert.target_alignment = best;
    cert.target_point = data.row(cert.target);

    const double denom = static_cast<double>(n1 - 1);
    cert.center_shift = (cert.target_point - cert.c1) / denom;
    cert.shifted_center = (static_cast<double>(n1) * cert.c1 - cert.target_point) / denom;
    const double shift_sq = cert.center_shift.squaredNorm();
    const Vector dir = cert.target_point - cert.c1;

    for (const auto i : members) {
        if (i == cert.target) continue;
        const Vector y = data.row(i);
        Theorem1Candidate c;
        c.index = i;
        c.alpha = (y - cert.c2).squaredNorm() - (y - cert.c1).squaredNorm();
        c.bound = shift_sq + 2.0 * (y - cert.c1).dot(cert.center_shift);
        c.alignment = dir.dot(y - cert.c1);
        c.predicted = c.alpha <= c.bound && c.alignment >= 0.0;
        if (c.predicted) cert.predicted_spill.push_back(i);
        cert.candidates.push_back(c);
    }
    return cert;
}

/// Invariant checks on a certificate; returns human-readable violations.
inline std::vector<std::string> certificate_violations(const Dataset& data, const Theorem1Certificate& cert,
                                                       double tol = 1e-9) {
    std::vector<std::string> out;
    const double denom = static_cast<double>(cert.source_size - 1);
    const Vector expected_shift = (cert.target_point - cert.c1) / denom;
    const Vector via_centers = cert.c1 - cert.shifted_center;
    const double scale = std::max(1.0, cert.c1.cwiseAbs().maxCoeff() + cert.target_point.cwiseAbs().maxCoeff());
    if ((expected_shift - cert.center_shift).cwiseAbs().maxCoeff() > tol * scale)
        out.emplace_back("center_shift differs from (x - c1)/(n1 - 1)");
    if ((via_centers - cert.center_shift).cwiseAbs().maxCoeff() > tol * scale)
        out.emplace_back("c1 - c1' differs from (x - c1)/(n1 - 1)");
    for (const auto& c : cert.candidates) {
        if (!c.predicted) continue;
        const Vector y = data.row(c.index);
        const double lhs = (y - cert.shifted_center).squaredNorm() - (y - cert.c2).squaredNorm();
        const double rhs = c.bound - c.alpha;
        const double mag = std::max({1.0, (y - cert.shifted_center).squaredNorm(), (y - cert.c2).squaredNorm()});
        if (std::abs(lhs - rhs) > tol * mag)
            out.push_back("identity ||y-c1'||^2 - ||y-c2||^2 = bound - alpha fails for sample " + std::to_string(c.index));
        if (lhs < -tol * mag) out.push_back("predicted sample " + std::to_string(c.index) + " is closer to c1' than to c2");
    }
    return out;
}

struct Theorem1Validation {
    std::vector<std::size_t> one_pass_spill;  // source -> target after one reassignment pass
    std::vector<std::size_t> full_spill;      // after Lloyd converges from the one-pass state
    std::vector<std::size_t> fresh_spill;     // after a fresh K-Means run on the perturbed data
    std::vector<std::size_t> missed;          // predicted but not moved in one pass
    std::vector<std::size_t> unexpected;      // moved in one pass but not predicted
};

/// Replaces x by c2 and checks which source points actually switch.
///
/// The one-pass check freezes memberships except x (now in the target
/// cluster), recomputes both means (c1', c2) and reassigns every point to its
/// nearest mean. That is exactly the frozen-cluster argument behind the
/// certificate; full Lloyd convergence and a fresh K-Means run are recorded as
/// well.
inline Theorem1Validation theorem1_validate(const Dataset& data, const Theorem1Certificate& cert, std::uint64_t seed) {
    const Dataset perturbed = data.with_row(cert.target, cert.c2);
    const int src = cert.source;
    const int dst = 1 - src;
    std::vector<int> frozen = cert.assignment.labels();
    frozen[cert.target] = dst;
    std::array<std::size_t, 2> sizes{};
    const Matrix centroids = detail::means_of(perturbed.values(), frozen, sizes);

    const auto spilled = [&](const std::vector<int>& after) {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < after.size(); ++i)
            if (i != cert.target && cert.assignment.label(i) == src && after[i] == dst) out.push_back(i);
        return out;
    };

    Theorem1Validation v;
    std::vector<int> one_pass(frozen.size());
    for (std::size_t i = 0; i < frozen.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const double to_src = (perturbed.values().row(r) - centroids.row(src)).squaredNorm();
        const double to_dst = (perturbed.values().row(r) - centroids.row(dst)).squaredNorm();
        one_pass[i] = to_dst <= to_src ? dst : src;
    }
    v.one_pass_spill = spilled(one_pass);

    const LloydRun full = lloyd(perturbed.values(), centroids, 300);
    v.full_spill = spilled(full.labels);

    const ClusterModel fresh = kmeans(perturbed, KMeansOptions{seed});
    v.fresh_spill = spilled(align_to(cert.assignment, fresh.assignment).labels());

    for (const auto p : cert.predicted_spill)
        if (!std::binary_search(v.one_pass_spill.begin(), v.one_pass_spill.end(), p)) v.missed.push_back(p);
    for (const auto p : v.one_pass_spill)
        if (!std::binary_search(cert.predicted_spill.begin(), cert.predicted_spill.end(), p)) v.unexpected.push_back(p);
    return v;
}

// ---------------------------------------------------------------------------
// Spill-over under a noisy metric
// ---------------------------------------------------------------------------

struct NoisyMetricConfig {
    double zeta = 0.0;
    std::uint64_t noise_seed = 0;
};

/// Pairwise Euclidean distance table.
inline Matrix euclidean_table(const Matrix& values) {
    const Eigen::Index n = values.rows();
    Matrix d = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = (values.row(i) - values.row(j)).norm();
    return d;
}

/// d'(u,v) = clamp(d(u,v) + eta_uv, max{0, d - zeta}, d + zeta) with eta_uv
/// uniform on [-zeta, zeta], symmetric and zero on the diagonal.
inline Matrix noisy_metric(const Matrix& true_table, const NoisyMetricConfig& config) {
    if (!(config.zeta >= 0.0)) throw ConfigError("noisy metric: zeta must be >= 0");
    const Eigen::Index n = true_table.rows();
    Matrix out = Matrix::Zero(n, n);
    auto rng = detail::make_rng(config.noise_seed, 0x2E7A);
    std::uniform_real_distribution<double> eta(-config.zeta, config.zeta);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = true_table(i, j);
            const double noise = config.zeta > 0.0 ? eta(rng) : 0.0;
            const double v = std::clamp(d + noise, std::max(0.0, d - config.zeta), d + config.zeta);
            out(i, j) = out(j, i) = v;
        }
    return out;
}

inline Matrix noisy_metric(const Dataset& data, const NoisyMetricConfig& config) {
    return noisy_metric(euclidean_table(data.values()), config);
}

/// Number of entries of `noisy` outside [max{0, d - zeta}, d + zeta], plus
/// asymmetric pairs and non-zero diagonal entries.
inline std::size_t metric_bound_violations(const Matrix& true_table, const Matrix& noisy, double zeta) {
    std::size_t bad = 0;
    for (Eigen::Index i = 0; i < noisy.rows(); ++i) {
        if (noisy(i, i) != 0.0) ++bad;
        for (Eigen::Index j = 0; j < noisy.cols(); ++j) {
            const double d = true_table(i, j);
            const double v = noisy(i, j);
            if (v < std::max(0.0, d - zeta) || v > d + zeta || v != noisy(j, i)) ++bad;
        }
    }
    return bad;
}

/// Two-medoid clustering over a distance table.
struct MedoidClustering {
    std::vector<int> labels;
    std::array<std::size_t, 2> medoids{0, 0};
};

/// Alternates nearest-medoid assignment (ties to cluster 0, each medoid stays
/// in its own cluster) and medoid update (member with the least summed
/// distance to its cluster, ties to the lowest index) until the medoids are
/// stable. Without `init`, the medoids start from the greedy build step:
/// the most central point, then the point that most reduces the total
/// distance to the nearest medoid (ties to the lowest index).
inline MedoidClustering medoid_cluster(const Matrix& table, std::optional<std::array<std::size_t, 2>> init = std::nullopt,
                                       int max_iter = 100) {
    const auto n = static_cast<std::size_t>(table.rows());
    MedoidClustering mc;
    if (init) {
        mc.medoids = *init;
    } else {
        Eigen::Index a = 0;
        table.rowwise().sum().minCoeff(&a);
        Eigen::Index b = a;
        double best_cost = std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < table.rows(); ++c) {
            if (c == a) continue;
            const double cost = table.row(a).cwiseMin(table.row(c)).sum();
            if (cost < best_cost) {
                best_cost = cost;
                b = c;
            }
        }
        mc.medoids = {static_cast<std::size_t>(a), static_cast<std::size_t>(b)};
    }
    if (mc.medoids[0] == mc.medoids[1]) throw DataError("medoid clustering: both medoids coincide");
    mc.labels.assign(n, 0);
    for (int it = 0; it < max_iter; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            mc.labels[i] = table(r, static_cast<Eigen::Index>(mc.medoids[1])) < table(r, static_cast<Eigen::Index>(mc.medoids[0])) ? 1 : 0;
        }
        mc.labels[mc.medoids[0]] = 0;
        mc.labels[mc.medoids[1]] = 1;
        std::array<std::size_t, 2> next = mc.medoids;
        for (int k = 0; k < 2; ++k) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                if (mc.labels[i] != k) continue;
                double s = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                    if (mc.labels[j] == k) s += table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                if (s < best) {
                    best = s;
                    next[static_cast<std::size_t>(k)] = i;
                }
            }
        }
        if (next == mc.medoids) break;
        mc.medoids = next;
    }
    return mc;
}

/// Same partition with cluster ids exchanged.
inline MedoidClustering swapped(MedoidClustering mc) {
    for (auto& l : mc.labels) l = 1 - l;
    std::swap(mc.medoids[0], mc.medoids[1]);
    return mc;
}

inline MedoidClustering align_to(const std::vector<int>& reference, MedoidClustering mc) {
    std::size_t agree = 0;
    for (std::size_t i = 0; i < reference.size(); ++i) agree += reference[i] == mc.labels[i] ? 1 : 0;
    return 2 * agree < reference.size() ? swapped(std::move(mc)) : mc;
}

struct Theorem2Record {
    std::size_t sample = 0;      // y: spilled under d'
    bool spilled_under_true = false;
    double margin = 0.0;         // d(y, c2bar) - d(y, c1bar)
    double gamma = 0.0;
    double lower_bound = 0.0;    // -gamma - 2 zeta
    bool inequality_holds = false;
};

struct Theorem2Report {
    double zeta = 0.0;
    std::size_t perturbed = 0;  // x
    std::size_t metric_violations = 0;
    std::array<std::size_t, 2> noisy_medoids_before{};
    std::array<std::size_t, 2> noisy_medoids_after{};
    std::array<std::size_t, 2> true_medoids_before{};
    std::array<std::size_t, 2> true_medoids_after{};
    std::vector<Theorem2Record> records;

    [[nodiscard]] std::size_t persisted() const {
        return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const auto& r) { return r.spilled_under_true; }));
    }
    [[nodiscard]] bool all_inequalities_hold() const {
        return std::all_of(records.begin(), records.end(), [](const auto& r) { return r.inequality_holds; });
    }
};

namespace detail {

/// Moves sample x onto sample c: x's distances become c's, and d(x, c) = 0.
inline Matrix move_onto(Matrix table, std::size_t x, std::size_t c) {
    const auto xi = static_cast<Eigen::Index>(x);
    const auto ci = static_cast<Eigen::Index>(c);
    table.row(xi) = table.row(ci);
    table.col(xi) = table.col(ci);
    table(xi, ci) = table(ci, xi) = 0.0;
    table(xi, xi) = 0.0;
    return table;
}

}  // namespace detail

/// Runs the constructive attack under the noisy metric d' and checks whether
/// each spilled sample also spills under the true Euclidean metric d, along
/// with the bound d(y, c2bar) - d(y, c1bar) > -gamma - 2 zeta.
///
/// Centers are medoids. The attacker moves the source point closest (under
/// d') to the opposing medoid onto that medoid; both metrics are then
/// re-clustered starting from their previous medoids.
inline Theorem2Report theorem2_experiment(const Dataset& data, const NoisyMetricConfig& config, int source = 0) {
    if (source != 0 && source != 1) throw ConfigError("theorem2: source cluster must be 0 or 1");
    const int dst = 1 - source;
    const Matrix d = euclidean_table(data.values());
    const Matrix dn = noisy_metric(d, config);

    Theorem2Report rep;
    rep.zeta = config.zeta;
    rep.metric_violations = metric_bound_violations(d, dn, config.zeta);

    MedoidClustering noisy = medoid_cluster(dn);
    if (noisy.labels.front() != 0) noisy = swapped(std::move(noisy));
    const std::size_t c1n = noisy.medoids[static_cast<std::size_t>(source)];
    const std::size_t c2n = noisy.medoids[static_cast<std::size_t>(dst)];

    std::size_t x = data.rows();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < data.rows(); ++i) {
        if (noisy.labels[i] != source || i == c1n) continue;
        const double v = dn(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c2n));
        if (v < best) {
            best = v;
            x = i;
        }
    }
    if (x == data.rows()) throw DataError("theorem2: source cluster has no movable point");
    rep.perturbed = x;

    const Matrix dn_after_table = detail::move_onto(dn, x, c2n);
    const Matrix d_after_table = detail::move_onto(d, x, c2n);
    rep.metric_violations += metric_bound_violations(d_after_table, dn_after_table, config.zeta);

    const MedoidClustering noisy_after = align_to(noisy.labels, medoid_cluster(dn_after_table, noisy.medoids));
    MedoidClustering truth = align_to(noisy.labels, medoid_cluster(d));
    const MedoidClustering truth_after = align_to(truth.labels, medoid_cluster(d_after_table, truth.medoids));

    rep.noisy_medoids_before = noisy.medoids;
    rep.noisy_medoids_after = noisy_after.medoids;
    rep.true_medoids_before = truth.medoids;
    rep.true_medoids_after = truth_after.medoids;

    const auto at = [](const Matrix& t, std::size_t i, std::size_t j) {
        return t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    };
    const std::size_t c1n_bar = noisy_after.medoids[static_cast<std::size_t>(source)];
    const std::size_t c1_bar = truth_after.medoids[static_cast<std::size_t>(source)];
    const std::size_t c2_bar = truth_after.medoids[static_cast<std::size_t>(dst)];
    const double gamma = at(dn_after_table, c1n_bar, c1n) + at(dn_after_table, c1n_bar, c1_bar) + at(dn_after_table, c2_bar, c2n);

    for (std::size_t y = 0; y < data.rows(); ++y) {
        if (y == x || noisy.labels[y] != source || noisy_after.labels[y] != dst) continue;
        Theorem2Record r;
        r.sample = y;
        r.spilled_under_true = truth.labels[y] == source && truth_after.labels[y] == dst;
        r.margin = at(d_after_table, y, c2_bar) - at(d_after_table, y, c1_bar);
        r.gamma = gamma;
        r.lower_bound = -gamma - 2.0 * config.zeta;
        r.inequality_holds = r.margin > r.lower_bound;
        rep.records.push_back(r);
    }
    return rep;
}

}  // namespace spillover
