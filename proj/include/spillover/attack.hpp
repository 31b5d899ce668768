#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "spillover/clustering.hpp"
#include "spillover/dataset.hpp"
#include "spillover/depth.hpp"
#include "spillover/error.hpp"
#include "spillover/optimizer.hpp"

namespace spillover {

/// The source-cluster sample closest (Euclidean) to the opposing centroid;
/// ties go to the lowest index.
inline std::size_t select_target(const Dataset& data, const ClusterModel& model, int source) {
    if (source != 0 && source != 1) throw ConfigError("select_target: source cluster must be 0 or 1");
    const Vector opposing = model.centroids.row(1 - source).transpose();
    std::size_t best = data.rows();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < data.rows(); ++i) {
        if (model.assignment.label(i) != source) continue;
        const double d = (data.row(i) - opposing).norm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    if (best == data.rows()) throw ConfigError("select_target: source cluster is empty");
    return best;
}

/// -||Y Y^T - Y' Y'^T||_F computed from the 2x2 contingency table.
///
/// Entry (i,j) of the difference is non-zero exactly when the pair's
/// co-membership flag differs between the partitions, so the squared norm is
/// the number of such ordered pairs: for contingency cells p = (a,b) and
/// q = (a',b'), every pair across them changed iff [a == a'] != [b == b'].
inline double delta_metric(const ClusterAssignment& y, const ClusterAssignment& yp) {
    if (y.size() != yp.size()) throw DataError("delta_metric: partitions have different sizes");
    std::array<std::array<double, 2>, 2> cnt{};
    for (std::size_t i = 0; i < y.size(); ++i) cnt[static_cast<std::size_t>(y.label(i))][static_cast<std::size_t>(yp.label(i))] += 1.0;
    double changed = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int a2 = 0; a2 < 2; ++a2)
                for (int b2 = 0; b2 < 2; ++b2)
                    if ((a == a2) != (b == b2)) changed += cnt[a][b] * cnt[a2][b2];
    return changed > 0.0 ? -std::sqrt(changed) : 0.0;
}

/// Relabels `after` so that it agrees with `before` on the majority of samples.
inline ClusterAssignment align_to(const ClusterAssignment& before, const ClusterAssignment& after) {
    if (before.size() != after.size()) throw DataError("align_to: partitions have different sizes");
    std::size_t agree = 0;
    for (std::size_t i = 0; i < before.size(); ++i) agree += before.label(i) == after.label(i) ? 1 : 0;
    return (2 * agree < before.size()) ? after.swapped() : after;
}

/// f(eps): recluster X with row `target` shifted by eps and return delta(Y, Y').
/// The clustering function is used strictly as a black box.
inline Objective make_objective(const Dataset& data, ClusteringFunction clusterer, ClusterAssignment reference,
                                std::size_t target) {
    if (target >= data.rows()) throw ConfigError("objective: target index out of range");
    return [data, clusterer = std::move(clusterer), reference = std::move(reference), target](const Vector& eps) {
        if (eps.size() != static_cast<Eigen::Index>(data.cols())) throw ConfigError("objective: perturbation has wrong dimension");
        if (!eps.allFinite()) throw ConfigError("objective: perturbation is not finite");
        const Dataset perturbed = data.with_row(target, data.row(target) + eps);
        return delta_metric(reference, clusterer(perturbed).assignment);
    };
}

enum class Optimizer { cors, anneal };

struct AttackConfig {
    Backend backend = Backend::kmeans;
    std::uint64_t cluster_seed = 0;
    int source_cluster = 0;  // k1: spill from
    int target_cluster = 1;  // k2: spill into
    std::optional<PerturbationBox> box;  // derived from the depth floor when unset
    std::optional<OptimBudget> budget;   // defaults_for(free box dimensions) when unset
    std::uint64_t optimizer_seed = 0;
    double depth_floor = 0.1;
    Optimizer optimizer = Optimizer::cors;
    std::function<void(const EvalRecord&, int)> on_eval;

    void validate() const {
        if (source_cluster == target_cluster) throw ConfigError("attack: source and target cluster must differ");
        if ((source_cluster != 0 && source_cluster != 1) || (target_cluster != 0 && target_cluster != 1))
            throw ConfigError("attack: cluster ids must be 0 or 1");
        if (!(depth_floor > 0.0 && depth_floor < 1.0)) throw ConfigError("attack: depth floor must lie in (0, 1)");
    }
};

struct AttackReport {
    std::size_t target_index = 0;
    int source_cluster = 0;
    int target_cluster = 1;
    std::array<std::size_t, 2> cluster_sizes{0, 0};
    Vector target_point;
    Vector delta_box;
    Vector epsilon_star;
    Vector perturbed_target;
    double delta_value = 0.0;
    std::vector<std::size_t> spillover;        // sample ids, k1 -> k2, target excluded
    std::vector<std::size_t> reverse_spill;    // sample ids, k2 -> k1, target excluded
    bool target_moved = false;
    double depth_of_perturbed = 0.0;
    double depth_floor_value = 0.0;
    double depth_quantile = 0.0;
    double depth_floor = 0.1;
    bool outlier_risk = false;
    ClusterAssignment before;
    ClusterAssignment after;  // aligned to `before`
    std::vector<EvalRecord> eval_trace;
};

/// Spill-over bookkeeping between the original and the (aligned) perturbed partition.
struct SpillSets {
    std::vector<std::size_t> forward;  // rows: source -> target
    std::vector<std::size_t> reverse;  // rows: target -> source
    bool target_moved = false;
};

inline SpillSets spill_sets(const ClusterAssignment& before, const ClusterAssignment& after_aligned, std::size_t target,
                            int source) {
    SpillSets s;
    for (std::size_t i = 0; i < before.size(); ++i) {
        if (before.label(i) == after_aligned.label(i)) continue;
        if (i == target) {
            s.target_moved = true;
        } else if (before.label(i) == source) {
            s.forward.push_back(i);
        } else {
            s.reverse.push_back(i);
        }
    }
    return s;
}

/// The full pipeline: cluster, pick the target, derive the box, minimize
/// delta over the box, recluster at the optimum and audit the depth of the
/// perturbed target against the unperturbed dataset.
inline AttackReport run_attack(const Dataset& data, const AttackConfig& config) {
    config.validate();
    const ClusteringFunction clusterer = make_clusterer(config.backend, config.cluster_seed);
    const ClusterModel model = clusterer(data);
    const std::size_t target = select_target(data, model, config.source_cluster);

    const DepthReport depth(data, model.assignment);
    PerturbationBox box;
    if (config.box) {
        box = *config.box;
        if (box.delta.size() != static_cast<Eigen::Index>(data.cols())) throw ConfigError("attack: box has wrong dimension");
        if ((box.delta.array() < 0.0).any()) throw ConfigError("attack: box half-widths must be non-negative");
    } else {
        DeltaSelectionOptions dopts;
        dopts.floor_quantile = config.depth_floor;
        box = select_delta(data, model.assignment, target, dopts);
    }

    const Objective f = make_objective(data, clusterer, model.assignment, target);
    const auto free = static_cast<Eigen::Index>(detail::free_dims(box).size());
    const OptimBudget budget = config.budget.value_or(OptimBudget::defaults_for(std::max<Eigen::Index>(free, 1), config.optimizer_seed));
    OptimResult opt;
    if (config.optimizer == Optimizer::cors) {
        CorsOptions copts;
        copts.on_eval = config.on_eval;
        opt = cors_minimize(f, box, budget, copts);
    } else {
        opt = anneal_minimize(f, box, budget);
    }

    AttackReport rep;
    rep.target_index = target;
    rep.source_cluster = config.source_cluster;
    rep.target_cluster = config.target_cluster;
    rep.cluster_sizes = model.assignment.cluster_sizes();
    rep.target_point = data.row(target);
    rep.delta_box = box.delta;
    rep.epsilon_star = opt.best_point;
    rep.perturbed_target = rep.target_point + rep.epsilon_star;
    rep.before = model.assignment;
    const ClusterModel after = clusterer(data.with_row(target, rep.perturbed_target));
    rep.after = align_to(model.assignment, after.assignment);
    rep.delta_value = delta_metric(model.assignment, after.assignment);

    const SpillSets s = spill_sets(rep.before, rep.after, target, config.source_cluster);
    for (const auto i : s.forward) rep.spillover.push_back(data.sample_ids()[i]);
    for (const auto i : s.reverse) rep.reverse_spill.push_back(data.sample_ids()[i]);
    rep.target_moved = s.target_moved;

    rep.depth_floor = config.depth_floor;
    rep.depth_floor_value = depth.floor_value(config.depth_floor);
    rep.depth_of_perturbed = depth.model()(rep.perturbed_target);
    rep.depth_quantile = depth.quantile_of(rep.depth_of_perturbed);
    rep.outlier_risk = rep.depth_of_perturbed < rep.depth_floor_value;
    rep.eval_trace = std::move(opt.trace);
    return rep;
}

}  // namespace spillover
