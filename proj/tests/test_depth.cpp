#include <gtest/gtest.h>

#include <random>

#include "spillover/depth.hpp"

using namespace spillover;

namespace {

Matrix gaussian_matrix(Eigen::Index n, Eigen::Index m, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Matrix x(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) x(i, j) = g(rng);
    return x;
}

// Scalar depth of v against a column, computed from scratch.
double depth_1d(double v, const std::vector<double>& col) {
    double mean = 0.0;
    for (const double c : col) mean += c;
    mean /= static_cast<double>(col.size());
    double var = 0.0;
    for (const double c : col) var += (c - mean) * (c - mean);
    var /= static_cast<double>(col.size() - 1);
    return 1.0 / (1.0 + (v - mean) * (v - mean) / var);
}

double comd_oracle(const Vector& x, const Matrix& values, const std::vector<int>& labels) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
        double s = 0.0;
        for (int k = 0; k < 2; ++k) {
            std::vector<double> col;
            for (Eigen::Index i = 0; i < values.rows(); ++i)
                if (labels[static_cast<std::size_t>(i)] == k) col.push_back(values(i, j));
            s += depth_1d(x(j), col);
        }
        best = std::min(best, s);
    }
    return best;
}

std::vector<int> alternating(Eigen::Index n) {
    std::vector<int> l(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < l.size(); ++i) l[i] = static_cast<int>(i % 2);
    return l;
}

}  // namespace

TEST(MahalanobisDepth, OneAtTheMean) {
    std::mt19937_64 rng(1);
    const Matrix x = gaussian_matrix(50, 3, rng);
    const Vector mean = x.colwise().mean().transpose();
    EXPECT_NEAR(mahalanobis_depth(mean, x), 1.0, 1e-12);
}

TEST(MahalanobisDepth, UnitDistanceGivesOneHalf) {
    std::mt19937_64 rng(2);
    const Matrix x = gaussian_matrix(40, 2, rng);
    const auto mom = SampleMoments::of(x);
    // Step along the first principal axis by sqrt(eigenvalue): squared distance 1.
    Eigen::SelfAdjointEigenSolver<Matrix> es(mom.covariance);
    const Vector p = mom.mean + std::sqrt(es.eigenvalues()(0)) * es.eigenvectors().col(0);
    EXPECT_NEAR(mahalanobis_depth(p, x), 0.5, 1e-12);
}

TEST(MahalanobisDepth, StandardGaussianAtThree) {
    std::mt19937_64 rng(3);
    const Matrix x = gaussian_matrix(10000, 2, rng);
    EXPECT_NEAR(mahalanobis_depth(Vector{{3.0, 0.0}}, x), 0.1, 0.02);
}

TEST(MahalanobisDepth, SingularCovarianceNamesComd) {
    Matrix x(5, 2);
    x << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10;
    try {
        mahalanobis_depth(Vector{{0.0, 0.0}}, x);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("COMD"), std::string::npos);
    }
    EXPECT_THROW(mahalanobis_depth(Vector{{0.0, 0.0}}, Matrix::Ones(2, 2)), NumericalError);
}

TEST(MahalanobisDepth, AffineInvarianceProperty) {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> dim(1, 5);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index m = dim(rng);
        const Matrix x = gaussian_matrix(3 * m + 10, m, rng);
        Matrix a = gaussian_matrix(m, m, rng);
        a.diagonal().array() += 3.0;  // keep it well conditioned
        const Vector b = gaussian_matrix(m, 1, rng, 5.0);
        const Vector p = gaussian_matrix(m, 1, rng, 2.0);
        const Matrix ax = (x * a.transpose()).rowwise() + b.transpose();
        const double d0 = mahalanobis_depth(p, x);
        const double d1 = mahalanobis_depth(a * p + b, ax);
        EXPECT_NEAR(d1, d0, 1e-9 * d0) << "trial " << trial;
    }
}

TEST(MahalanobisDepth, MeanIsDeepestProperty) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const Matrix x = gaussian_matrix(30, 3, rng, 1.0 + trial % 4);
        const Vector mean = x.colwise().mean().transpose();
        EXPECT_NEAR(mahalanobis_depth(mean, x), 1.0, 1e-12);
    }
}

TEST(MahalanobisDepth, DecreasesAlongRays) {
    std::mt19937_64 rng(6);
    const Matrix x = gaussian_matrix(60, 3, rng);
    const MahalanobisDepth md(x);
    for (int trial = 0; trial < 50; ++trial) {
        const Vector dir = gaussian_matrix(3, 1, rng).normalized();
        double prev = md(md.mean());
        for (double t = 0.25; t < 10.0; t += 0.25) {
            const double cur = md(md.mean() + t * dir);
            EXPECT_LT(cur, prev);
            prev = cur;
        }
    }
}

TEST(Mdc, SingleClusterReduces) {
    std::mt19937_64 rng(7);
    const Matrix c = gaussian_matrix(40, 2, rng);
    const Vector p{{0.4, -1.2}};
    EXPECT_DOUBLE_EQ(mdc(p, {c}), mahalanobis_depth(p, c));
}

TEST(Mdc, MeanOfFarClusterBetweenOneAndOnePointOne) {
    std::mt19937_64 rng(8);
    const Matrix a = gaussian_matrix(50, 2, rng);
    const Matrix b = gaussian_matrix(50, 2, rng).rowwise() + Eigen::RowVector2d(20.0, 0.0);
    const Vector mean_a = a.colwise().mean().transpose();
    const double v = mdc(mean_a, {a, b});
    const double second = mahalanobis_depth(mean_a, b);
    EXPECT_NEAR(v, 1.0 + second, 1e-12);
    EXPECT_GT(v, 1.0);
    EXPECT_LT(v, 1.1);
}

TEST(Mdc, MidpointOfMirroredClusters) {
    std::mt19937_64 rng(9);
    const Matrix a = gaussian_matrix(50, 2, rng);
    const Matrix b = (-a).rowwise() + Eigen::RowVector2d(10.0, 0.0);  // mirror image through (5, 0)
    const Vector mid = 0.5 * (a.colwise().mean() + b.colwise().mean()).transpose();
    EXPECT_NEAR(mdc(mid, {a, b}), 2.0 * mahalanobis_depth(mid, a), 1e-12);
}

TEST(Comd, MatchesOracleAndBoundedByCoordinateMdc) {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index m = 1 + trial % 6;
        const Matrix x = gaussian_matrix(20 + trial % 17, m, rng, 1.0 + trial % 3);
        const auto labels = alternating(x.rows());
        const ComdModel model(x, ClusterAssignment(labels));
        const Vector p = gaussian_matrix(m, 1, rng, 2.0);
        const double v = model(p);
        EXPECT_NEAR(v, comd_oracle(p, x, labels), 1e-12);
        EXPECT_GT(v, 0.0);
        EXPECT_LE(v, 2.0);
        for (Eigen::Index j = 0; j < m; ++j) EXPECT_LE(v, model.coordinate_depth(j, p(j)) + 1e-15);
    }
}

TEST(Comd, OneCoordinateIsScalarMdc) {
    std::mt19937_64 rng(11);
    const Matrix x = gaussian_matrix(30, 1, rng);
    const auto labels = alternating(30);
    const ClusterAssignment a(labels);
    const Vector p{{0.7}};
    EXPECT_NEAR(comd(p, Dataset(x), a), mdc(p, {cluster_rows(x, a, 0), cluster_rows(x, a, 1)}), 1e-12);
}

TEST(Comd, ClusterMeanIsAboveOne) {
    const Dataset d = synth_gaussians(toy_specs(), 12);
    std::vector<int> labels(200, 0);
    std::fill(labels.begin() + 100, labels.end(), 1);
    const ClusterAssignment a(labels);
    const Vector mean0 = cluster_rows(d.values(), a, 0).colwise().mean().transpose();
    EXPECT_GT(comd(mean0, d, a), 1.0);
}

TEST(Comd, ZeroVarianceCoordinateSkippedUnlessAllAre) {
    Matrix x(6, 2);
    x << 0, 1, 1, 1, 2, 1, 5, 2, 6, 3, 7, 4;  // column 1 is constant in cluster 0
    const ClusterAssignment a({0, 0, 0, 1, 1, 1});
    const ComdModel model(x, a);
    EXPECT_EQ(model.skipped_coordinates(), (std::vector<Eigen::Index>{1}));
    EXPECT_DOUBLE_EQ(model(Vector{{1.0, 100.0}}), model.coordinate_depth(0, 1.0));
    Matrix flat(4, 1);
    flat << 1, 1, 2, 2;
    EXPECT_THROW(ComdModel(flat, ClusterAssignment({0, 0, 1, 1})), NumericalError);
}

TEST(DepthReport, QuantileConventionAndMonotonicity) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const Matrix x = gaussian_matrix(25 + trial % 11, 1 + trial % 4, rng);
        const Dataset d(x);
        const DepthReport rep(d, ClusterAssignment(alternating(x.rows())));
        const auto& v = rep.per_sample_comd();
        const auto n = static_cast<double>(v.size());
        const double lo = *std::min_element(v.begin(), v.end());
        const double hi = *std::max_element(v.begin(), v.end());
        // #{<= v} / n: the minimum sample counts itself.
        EXPECT_DOUBLE_EQ(rep.quantile_of(lo), 1.0 / n);
        EXPECT_DOUBLE_EQ(rep.quantile_of(hi), 1.0);
        EXPECT_DOUBLE_EQ(rep.quantile_of(lo - 1e-9), 0.0);
        std::vector<double> probes(v);
        std::sort(probes.begin(), probes.end());
        for (std::size_t i = 1; i < probes.size(); ++i) EXPECT_LE(rep.quantile_of(probes[i - 1]), rep.quantile_of(probes[i]));
        for (const double q : {0.05, 0.1, 0.5, 1.0}) {
            const double f = rep.floor_value(q);
            EXPECT_GE(rep.quantile_of(f), q - 1e-12);
            EXPECT_LT(rep.quantile_of(std::nextafter(f, -1.0)), q);
        }
    }
}

TEST(SelectDelta, FloorOfOneGivesZeroBox) {
    const Dataset d = synth_gaussians(toy_specs(), 14);
    const ClusterAssignment a = kmeans(d, {14}).assignment;
    DeltaSelectionOptions opts;
    opts.floor_quantile = 1.0;
    EXPECT_TRUE(select_delta(d, a, 0, opts).degenerate());
}

TEST(SelectDelta, ZeroCapGivesZeroBox) {
    const Dataset d = synth_gaussians(toy_specs(), 15);
    const auto model = kmeans(d, {15});
    DeltaSelectionOptions opts;
    opts.budget_cap = Vector::Zero(2);
    const std::size_t t = model.assignment.members(0).front();
    EXPECT_TRUE(select_delta(d, model.assignment, t, opts).degenerate());
}

TEST(SelectDelta, ProbesStayAboveFloor) {
    const Dataset d = synth_gaussians(toy_specs(), 16);
    const auto model = kmeans(d, {16});
    const DepthReport rep(d, model.assignment);
    const double floor = rep.floor_value(0.1);
    std::size_t checked = 0;
    for (std::size_t t = 0; t < d.rows(); t += 7) {
        if (rep.per_sample_comd()[t] < floor) {
            EXPECT_THROW(select_delta(d, model.assignment, t), AttackAborted);
            continue;
        }
        const PerturbationBox box = select_delta(d, model.assignment, t);
        ++checked;
        // Every corner as well as the axis extremes stays at or above the floor.
        for (int corner = 0; corner < 4; ++corner) {
            const Vector eps{{(corner & 1 ? 1.0 : -1.0) * box.delta(0), (corner & 2 ? 1.0 : -1.0) * box.delta(1)}};
            EXPECT_GE(comd_oracle(d.row(t) + eps, d.values(), model.assignment.labels()), floor - 1e-12);
        }
    }
    EXPECT_GT(checked, 0u);
}

TEST(SelectDelta, ToyBoxContainsMoveOntoOpposingCentroid) {
    // Fixed seed: the target is the broad-cluster point closest to the tight
    // centroid, and the box must admit moving it onto that centroid.
    const Dataset d = synth_gaussians(toy_specs(), 1);
    const auto model = kmeans(d, {1});
    const int source = model.centroids(0, 0) < model.centroids(1, 0) ? 0 : 1;
    const auto members = model.assignment.members(source);
    std::size_t t = members.front();
    for (const auto i : members)
        if ((d.row(i) - model.centroids.row(1 - source).transpose()).norm() <
            (d.row(t) - model.centroids.row(1 - source).transpose()).norm())
            t = i;
    const PerturbationBox box = select_delta(d, model.assignment, t);
    const Vector move = model.centroids.row(1 - source).transpose() - d.row(t);
    EXPECT_TRUE(box.contains(move)) << "delta " << box.delta.transpose() << " move " << move.transpose();
}

TEST(SelectDelta, RejectsBadArguments) {
    const Dataset d = synth_gaussians(toy_specs(), 17);
    const ClusterAssignment a = kmeans(d).assignment;
    EXPECT_THROW(select_delta(d, a, 999), ConfigError);
    DeltaSelectionOptions opts;
    opts.floor_quantile = 0.0;
    EXPECT_THROW(select_delta(d, a, 0, opts), ConfigError);
    opts.floor_quantile = 0.1;
    opts.budget_cap = Vector::Zero(3);
    EXPECT_THROW(select_delta(d, a, 0, opts), ConfigError);
}
