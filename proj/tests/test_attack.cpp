#include <gtest/gtest.h>

#include <random>

#include "spillover/attack.hpp"

using namespace spillover;

namespace {

// Builds Y Y^T explicitly and takes the Frobenius norm of the difference.
double delta_oracle(const std::vector<int>& y, const std::vector<int>& yp) {
    const auto n = static_cast<Eigen::Index>(y.size());
    Matrix a = Matrix::Zero(n, 2);
    Matrix b = Matrix::Zero(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, y[static_cast<std::size_t>(i)]) = 1.0;
        b(i, yp[static_cast<std::size_t>(i)]) = 1.0;
    }
    return -(a * a.transpose() - b * b.transpose()).norm();
}

std::vector<int> random_partition(std::size_t n, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(0.5);
    std::vector<int> l(n);
    do {
        for (auto& v : l) v = coin(rng) ? 1 : 0;
    } while (std::count(l.begin(), l.end(), 0) == 0 || std::count(l.begin(), l.end(), 1) == 0);
    return l;
}

Dataset toy(std::uint64_t seed) { return synth_gaussians(toy_specs(), seed); }

}  // namespace

TEST(SelectTarget, NearestToOpposingCentroid) {
    Matrix v(3, 2);
    v << 0, 0, 1, 0, 5, 0;
    const Dataset d(v);
    const ClusterModel m = model_from_assignment(v, ClusterAssignment({0, 0, 1}));
    EXPECT_EQ(select_target(d, m, 0), 1u);
    EXPECT_EQ(select_target(d, m, 1), 2u);
    EXPECT_THROW(select_target(d, m, 2), ConfigError);
}

TEST(SelectTarget, TiesGoToLowestIndex) {
    Matrix v(4, 2);
    v << 0, 1, 0, -1, -1, 0, 3, 0;  // rows 0 and 1 tie
    const Dataset d(v);
    const ClusterModel m = model_from_assignment(v, ClusterAssignment({0, 0, 0, 1}));
    EXPECT_EQ(select_target(d, m, 0), 0u);
}

TEST(SelectTarget, ToyTargetLeansTowardOpposingCluster) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Dataset d = toy(seed);
        const ClusterModel m = kmeans(d, {seed});
        for (int source = 0; source < 2; ++source) {
            const std::size_t t = select_target(d, m, source);
            const Vector c1 = m.centroids.row(source).transpose();
            const Vector c2 = m.centroids.row(1 - source).transpose();
            EXPECT_GE((d.row(t) - c1).dot(c2 - c1), 0.0) << "seed " << seed << " source " << source;
        }
    }
}

TEST(DeltaMetric, HandExamples) {
    const ClusterAssignment y({0, 0, 1, 1});
    EXPECT_DOUBLE_EQ(delta_metric(y, y), 0.0);
    EXPECT_DOUBLE_EQ(delta_metric(y, y.swapped()), 0.0);
    EXPECT_NEAR(delta_metric(y, ClusterAssignment({0, 1, 1, 1})), -std::sqrt(6.0), 1e-12);
    EXPECT_THROW(delta_metric(y, ClusterAssignment({0, 1})), DataError);
}

TEST(DeltaMetric, MatchesMatrixDefinition) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::size_t> size(2, 50);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = size(rng);
        const auto a = random_partition(n, rng);
        const auto b = random_partition(n, rng);
        const double d = delta_metric(ClusterAssignment(a), ClusterAssignment(b));
        EXPECT_NEAR(d, delta_oracle(a, b), 1e-9);
        EXPECT_NEAR(d * d, std::round(d * d), 1e-9);
    }
}

TEST(DeltaMetric, PermutationInvariance) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const ClusterAssignment a(random_partition(30, rng));
        const ClusterAssignment b(random_partition(30, rng));
        const double d = delta_metric(a, b);
        EXPECT_DOUBLE_EQ(delta_metric(a.swapped(), b), d);
        EXPECT_DOUBLE_EQ(delta_metric(a, b.swapped()), d);
        EXPECT_DOUBLE_EQ(delta_metric(b, a), d);
    }
}

TEST(AlignTo, MajorityAgreement) {
    const ClusterAssignment before({0, 0, 0, 1, 1});
    EXPECT_EQ(align_to(before, ClusterAssignment({1, 1, 1, 0, 1})), ClusterAssignment({0, 0, 0, 1, 0}));
    EXPECT_EQ(align_to(before, ClusterAssignment({0, 0, 1, 1, 1})), ClusterAssignment({0, 0, 1, 1, 1}));
}

TEST(Objective, IdentityDeterminismAndTheoremMove) {
    const Dataset d = toy(3);
    const ClusteringFunction c = make_clusterer(Backend::kmeans, 3);
    const ClusterModel m = c(d);
    const int source = m.centroids(0, 0) < m.centroids(1, 0) ? 0 : 1;
    const std::size_t t = select_target(d, m, source);
    const Objective f = make_objective(d, c, m.assignment, t);
    EXPECT_EQ(f(Vector::Zero(2)), 0.0);
    const Vector move = m.centroids.row(1 - source).transpose() - d.row(t);
    const double v = f(move);
    EXPECT_LT(v, 0.0);
    EXPECT_EQ(f(move), v);
    EXPECT_THROW(f(Vector{{std::nan(""), 0.0}}), ConfigError);
    EXPECT_THROW(f(Vector::Zero(3)), ConfigError);
    EXPECT_THROW(make_objective(d, c, m.assignment, 500), ConfigError);
}

TEST(Objective, PerturbsOnlyTheTargetRow) {
    const Dataset d = toy(4);
    std::size_t seen_target = 0;
    Matrix seen;
    const ClusteringFunction spy = [&](const Dataset& x) {
        seen = x.values();
        return kmeans(x, {4});
    };
    const ClusterModel m = kmeans(d, {4});
    const Objective f = make_objective(d, spy, m.assignment, 17);
    f(Vector{{0.3, -0.2}});
    const Matrix diff = seen - d.values();
    for (Eigen::Index i = 0; i < diff.rows(); ++i) {
        if (diff.row(i).norm() > 0.0) {
            EXPECT_EQ(i, 17);
            ++seen_target;
        }
    }
    EXPECT_EQ(seen_target, 1u);
}

TEST(RunAttack, ZeroBoxChangesNothing) {
    const Dataset d = toy(5);
    AttackConfig cfg;
    cfg.cluster_seed = 5;
    cfg.box = PerturbationBox{Vector::Zero(2)};
    const AttackReport r = run_attack(d, cfg);
    EXPECT_TRUE(r.epsilon_star.isZero());
    EXPECT_EQ(r.delta_value, 0.0);
    EXPECT_TRUE(r.spillover.empty());
    EXPECT_TRUE(r.reverse_spill.empty());
    EXPECT_FALSE(r.target_moved);
    EXPECT_EQ(r.eval_trace.size(), static_cast<std::size_t>(OptimBudget::defaults_for(1).total_evals));
}

TEST(RunAttack, SpillSetsAreSoundAndReproducible) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const Dataset d = toy(seed);
        AttackConfig cfg;
        cfg.cluster_seed = seed;
        cfg.optimizer_seed = seed;
        const ClusterModel m = kmeans(d, {seed});
        cfg.source_cluster = m.centroids(0, 0) < m.centroids(1, 0) ? 0 : 1;
        cfg.target_cluster = 1 - cfg.source_cluster;
        const AttackReport r = run_attack(d, cfg);
        EXPECT_TRUE(PerturbationBox{r.delta_box}.contains(r.epsilon_star));
        const auto id_to_row = [&](std::size_t id) {
            return static_cast<std::size_t>(std::find(d.sample_ids().begin(), d.sample_ids().end(), id) - d.sample_ids().begin());
        };
        for (const auto id : r.spillover) {
            const auto i = id_to_row(id);
            EXPECT_NE(i, r.target_index);
            EXPECT_EQ(r.before.label(i), cfg.source_cluster);
            EXPECT_EQ(r.after.label(i), cfg.target_cluster);
        }
        for (std::size_t i = 0; i < d.rows(); ++i) {
            if (i == r.target_index) continue;
            const bool listed = std::count(r.spillover.begin(), r.spillover.end(), d.sample_ids()[i]) > 0;
            const bool reverse = std::count(r.reverse_spill.begin(), r.reverse_spill.end(), d.sample_ids()[i]) > 0;
            if (!listed && !reverse) {
                EXPECT_EQ(r.before.label(i), r.after.label(i));
            }
            if (reverse) {
                EXPECT_EQ(r.before.label(i), cfg.target_cluster);
            }
        }
        // Reported delta matches a recomputation from the reported assignments.
        EXPECT_NEAR(r.delta_value, delta_oracle(r.before.labels(), r.after.labels()), 1e-9);
        EXPECT_EQ(r.outlier_risk, r.depth_of_perturbed < r.depth_floor_value);

        const AttackReport again = run_attack(d, cfg);
        EXPECT_TRUE(again.epsilon_star == r.epsilon_star);
        EXPECT_EQ(again.delta_value, r.delta_value);
        EXPECT_EQ(again.spillover, r.spillover);
        ASSERT_EQ(again.eval_trace.size(), r.eval_trace.size());
        for (std::size_t i = 0; i < r.eval_trace.size(); ++i) EXPECT_EQ(again.eval_trace[i].value, r.eval_trace[i].value);
    }
}

TEST(RunAttack, AnnealBaselineAlsoFeasible) {
    const Dataset d = toy(6);
    AttackConfig cfg;
    cfg.cluster_seed = 6;
    cfg.optimizer = Optimizer::anneal;
    cfg.budget = OptimBudget{40, 20, 6};
    const ClusterModel m = kmeans(d, {6});
    cfg.source_cluster = m.centroids(0, 0) < m.centroids(1, 0) ? 0 : 1;
    cfg.target_cluster = 1 - cfg.source_cluster;
    const AttackReport r = run_attack(d, cfg);
    EXPECT_EQ(r.eval_trace.size(), 40u);
    for (const auto& e : r.eval_trace) EXPECT_TRUE(PerturbationBox{r.delta_box}.contains(e.point));
}

TEST(RunAttack, ConfigValidation) {
    const Dataset d = toy(7);
    AttackConfig cfg;
    cfg.target_cluster = 0;
    EXPECT_THROW(run_attack(d, cfg), ConfigError);
    cfg = {};
    cfg.depth_floor = 1.5;
    EXPECT_THROW(run_attack(d, cfg), ConfigError);
    cfg = {};
    cfg.box = PerturbationBox{Vector::Zero(3)};
    EXPECT_THROW(run_attack(d, cfg), ConfigError);
}
