#include <gtest/gtest.h>

#include <random>

#include "spillover/theory.hpp"

using namespace spillover;

namespace {

Dataset two_blobs(Eigen::Index m, std::size_t n1, std::size_t n2, double gap, std::uint64_t seed) {
    Vector a = Vector::Zero(m);
    Vector b = Vector::Zero(m);
    b(0) = gap;
    return synth_gaussians({{a, 1.0, n1}, {b, 1.0, n2}}, seed);
}

}  // namespace

TEST(Theorem1, CertificateIdentityOnRandomData) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::size_t> size(10, 200);
    const Eigen::Index dims[] = {2, 5, 10};
    for (int trial = 0; trial < 30; ++trial) {
        const Dataset d = two_blobs(dims[trial % 3], size(rng), size(rng), 3.0, static_cast<std::uint64_t>(trial));
        const ClusterModel m = kmeans(d, {static_cast<std::uint64_t>(trial)});
        for (int source = 0; source < 2; ++source) {
            const auto cert = theorem1_certify(d, m, source);
            EXPECT_TRUE(certificate_violations(d, cert).empty());
            // c1' recomputed from the members directly.
            Vector rest = Vector::Zero(d.cols());
            for (const auto i : m.assignment.members(source))
                if (i != cert.target) rest += d.row(i);
            rest /= static_cast<double>(cert.source_size - 1);
            EXPECT_LT((rest - cert.shifted_center).cwiseAbs().maxCoeff(), 1e-9);
            for (const auto& c : cert.candidates) {
                const Vector y = d.row(c.index);
                const double lhs = (y - cert.shifted_center).squaredNorm() - (y - cert.c2).squaredNorm();
                EXPECT_NEAR(lhs, c.bound - c.alpha, 1e-9 * std::max(1.0, std::abs(lhs)));
                if (c.predicted) {
                    EXPECT_GE(lhs, -1e-9);
                }
            }
            const auto v = theorem1_validate(d, cert, 0);
            EXPECT_TRUE(v.missed.empty());
            EXPECT_TRUE(v.unexpected.empty());
        }
    }
}

TEST(Theorem1, TwoPointSourceShiftsByFullOffset) {
    Matrix v(4, 2);
    v << 0, 0, 0, 0, 5, 0, 6, 0;
    const Dataset d(v);
    Matrix w(4, 2);
    w << 0, 0, 1, 0, 5, 0, 6, 0;
    const Dataset e(w);
    const ClusterModel m = model_from_assignment(w, ClusterAssignment({0, 0, 1, 1}));
    const auto cert = theorem1_certify(e, m, 0);
    EXPECT_EQ(cert.source_size, 2u);
    EXPECT_EQ(cert.target, 1u);
    EXPECT_LT((cert.center_shift - (cert.target_point - cert.c1)).norm(), 1e-15);
    // Duplicated source points: x coincides with c1, so the shift is zero.
    const ClusterModel md = model_from_assignment(v, ClusterAssignment({0, 0, 1, 1}));
    const auto dup = theorem1_certify(d, md, 0);
    EXPECT_LT(dup.center_shift.norm(), 1e-15);
}

TEST(Theorem1, ToyHasAlignedPredictedSpill) {
    const Dataset d = synth_gaussians(toy_specs(), 0);
    const ClusterModel m = kmeans(d, {0});
    const int source = m.centroids(0, 0) < m.centroids(1, 0) ? 0 : 1;
    const auto cert = theorem1_certify(d, m, source);
    EXPECT_GE(cert.target_alignment, 0.0);
    ASSERT_FALSE(cert.predicted_spill.empty());
    const bool aligned = std::any_of(cert.candidates.begin(), cert.candidates.end(),
                                     [](const auto& k) { return k.predicted && k.alignment >= 0.0; });
    EXPECT_TRUE(aligned);
}

TEST(Theorem1, OnePassMatchesPredictionOnToy) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Dataset d = synth_gaussians(toy_specs(), seed);
        const ClusterModel m = kmeans(d, {seed});
        for (int source = 0; source < 2; ++source) {
            const auto cert = theorem1_certify(d, m, source);
            const auto v = theorem1_validate(d, cert, seed);
            EXPECT_EQ(v.one_pass_spill, cert.predicted_spill) << "seed " << seed;
        }
    }
}

TEST(Theorem1, EmptyPredictionGivesEmptyOnePassSpill) {
    // Tight, far-apart clusters: moving one point cannot drag anything over.
    const Dataset d = synth_gaussians({{Vector{{0.0, 0.0}}, 0.1, 30}, {Vector{{50.0, 0.0}}, 0.1, 30}}, 3);
    const ClusterModel m = kmeans(d, {3});
    const auto cert = theorem1_certify(d, m, 0);
    EXPECT_TRUE(cert.predicted_spill.empty());
    EXPECT_TRUE(theorem1_validate(d, cert, 3).one_pass_spill.empty());
}

TEST(Theorem1, RejectsSingletonSource) {
    Matrix v(3, 1);
    v << 0, 5, 6;
    const ClusterModel m = model_from_assignment(v, ClusterAssignment({0, 1, 1}));
    EXPECT_THROW(theorem1_certify(Dataset(v), m, 0), DataError);
}

TEST(NoisyMetric, BoundsSymmetryAndZeroNoise) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Dataset d = two_blobs(3, 20, 25, 4.0, seed);
        const Matrix truth = euclidean_table(d.values());
        for (const double zeta : {0.0, 0.1, 1.0, 10.0}) {
            const Matrix dn = noisy_metric(d, {zeta, seed});
            EXPECT_EQ(metric_bound_violations(truth, dn, zeta), 0u);
            EXPECT_TRUE(dn.isApprox(dn.transpose(), 0.0) || dn == dn.transpose());
            EXPECT_TRUE(dn.diagonal().isZero(0.0));
            EXPECT_GE(dn.minCoeff(), 0.0);
            for (Eigen::Index i = 0; i < dn.rows(); ++i)
                for (Eigen::Index j = 0; j < dn.cols(); ++j) {
                    EXPECT_GE(dn(i, j), std::max(0.0, truth(i, j) - zeta));
                    EXPECT_LE(dn(i, j), truth(i, j) + zeta);
                }
            if (zeta == 0.0) {
                EXPECT_TRUE(dn == truth);
            }
        }
        EXPECT_TRUE(noisy_metric(d, {0.5, seed}) == noisy_metric(d, {0.5, seed}));
    }
    EXPECT_THROW(noisy_metric(Matrix::Zero(2, 2), {-1.0, 0}), ConfigError);
}

TEST(Medoids, SeparatedPairs) {
    Matrix v(4, 1);
    v << 0, 1, 10, 11;
    const auto mc = medoid_cluster(euclidean_table(v));
    EXPECT_EQ(mc.labels[0], mc.labels[1]);
    EXPECT_EQ(mc.labels[2], mc.labels[3]);
    EXPECT_NE(mc.labels[0], mc.labels[2]);
}

TEST(Theorem2, ZeroNoisePersistsEverySpill) {
    std::size_t records = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Dataset d = two_blobs(2, 40, 40, 2.0, seed);
        const auto rep = theorem2_experiment(d, {0.0, seed});
        EXPECT_EQ(rep.metric_violations, 0u);
        EXPECT_EQ(rep.persisted(), rep.records.size()) << "seed " << seed;
        records += rep.records.size();
    }
    EXPECT_GT(records, 0u) << "no spill-over occurred, the check is vacuous";
}

TEST(Theorem2, InequalityHoldsAndGammaNonNegative) {
    std::size_t records = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Dataset d = two_blobs(2, 40, 40, 2.0, seed);
        for (const double zeta : {0.05, 0.1, 0.5}) {
            const auto rep = theorem2_experiment(d, {zeta, seed});
            EXPECT_EQ(rep.metric_violations, 0u);
            for (const auto& r : rep.records) {
                EXPECT_GE(r.gamma, 0.0);
                EXPECT_DOUBLE_EQ(r.lower_bound, -r.gamma - 2.0 * zeta);
                EXPECT_TRUE(r.inequality_holds) << "seed " << seed << " sample " << r.sample;
            }
            records += rep.records.size();
        }
    }
    EXPECT_GT(records, 0u);
}

TEST(Theorem2, WellSeparatedPersistenceBaseline) {
    // Centers 4 apart at unit spread, zeta = 5% of the gap.
    std::size_t records = 0;
    std::size_t persisted = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto rep = theorem2_experiment(two_blobs(2, 20, 20, 4.0, seed), {0.05 * 4.0, seed});
        records += rep.records.size();
        persisted += rep.persisted();
    }
    ASSERT_GT(records, 0u);
    EXPECT_GE(static_cast<double>(persisted) / static_cast<double>(records), 0.9)
        << persisted << " of " << records << " spilled samples persisted";
}
