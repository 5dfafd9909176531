#include "diffcd/sampler.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

namespace diffcd {
namespace {

TEST(Normalize, HandComputedBox) {
    PointCloud c;
    c.points.resize(3, 3);
    c.points << 0, 2, 2, 0, 0, 1, 0, 0, 1;
    const auto [out, t] = normalize_cloud(c);
    EXPECT_LT((t.center - Eigen::Vector3d(1, 0.5, 0.5)).norm(), 1e-15);
    EXPECT_DOUBLE_EQ(t.scale, 2.0);
    Points expected(3, 3);
    expected << -0.5, 0.5, 0.5, -0.25, -0.25, 0.25, -0.25, -0.25, 0.25;
    EXPECT_LT((out.points - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Normalize, AlreadyNormalizedIsIdentity) {
    PointCloud c;
    c.points.resize(2, 2);
    c.points << -0.5, 0.5, -0.5, 0.5;
    const auto [out, t] = normalize_cloud(c);
    EXPECT_NEAR(t.scale, 1.0, 1e-15);
    EXPECT_LT(t.center.norm(), 1e-15);
    EXPECT_LT((out.points - c.points).norm(), 1e-15);
}

TEST(Normalize, RoundTripAndFitsUnitBox) {
    Rng rng(1);
    PointCloud c;
    c.points = test::random_points(3, 500, rng, 40.0);
    c.points.row(1).array() += 100.0;
    const auto [out, t] = normalize_cloud(c);
    EXPECT_LE(out.points.cwiseAbs().maxCoeff(), 0.5 + 1e-12);
    const Points back = t.invert(out.points);
    EXPECT_LE((back - c.points).cwiseAbs().maxCoeff() / c.points.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Normalize, RejectsDegenerateClouds) {
    PointCloud empty;
    empty.points.resize(3, 0);
    EXPECT_THROW(normalize_cloud(empty), InputError);
    PointCloud same;
    same.points = Points::Ones(3, 4);
    EXPECT_THROW(normalize_cloud(same), InputError);
}

TEST(SdfDescent, ExactSdfProjectsInOneStep) {
    const auto s = AnalyticSdf::sphere(3, 0.3);
    const auto x = sdf_descent(s, Eigen::Vector3d(0.6, 0, 0), 1, 1e-3);
    ASSERT_TRUE(x.has_value());
    EXPECT_LT((*x - Eigen::Vector3d(0.3, 0, 0)).norm(), 1e-15);
}

TEST(SdfDescent, ScaledLinearGeometricResidual) {
    const auto f = AnalyticSdf::scaled_linear(Eigen::Vector3d(1, 0, 0), 0.2, 1.5);
    const auto x = sdf_descent(f, Eigen::Vector3d(0.5, 0.1, -0.1), 4, 0.03);
    ASSERT_TRUE(x.has_value());
    EXPECT_NEAR((*x)[0], 0.21875, 1e-14);
    EXPECT_NEAR((*x)[1], 0.1, 1e-15);
    EXPECT_FALSE(sdf_descent(f, Eigen::Vector3d(0.5, 0.1, -0.1), 4, 0.02).has_value());
}

TEST(SdfDescent, ConstantFieldRejected) {
    const auto one = AnalyticSdf::constant(3, 1.0);
    EXPECT_FALSE(sdf_descent(one, Vector::Zero(3), 4, 1e-3).has_value());
}

TEST(SdfDescent, AnalyticClosestPointIndependentOfSteps) {
    Rng rng(2);
    const auto s = AnalyticSdf::sphere(3, 0.3);
    const auto plane = AnalyticSdf::plane(Eigen::Vector3d(0, 1, 1), 0.05);
    const Eigen::Vector3d n = Eigen::Vector3d(0, 1, 1).normalized();
    for (int i = 0; i < 100; ++i) {
        const Vector p = test::random_point(3, rng);
        for (int m : {1, 2, 5}) {
            const auto xs = sdf_descent(s, p, m, 1e-9);
            ASSERT_TRUE(xs.has_value());
            EXPECT_LT((*xs - 0.3 * p / p.norm()).norm(), 1e-14);
            const auto xp = sdf_descent(plane, p, m, 1e-9);
            ASSERT_TRUE(xp.has_value());
            EXPECT_LT((*xp - (p - (n.dot(p) - 0.05) * n)).norm(), 1e-14);
        }
    }
}

TEST(SdfDescent, BatchedMatchesSingle) {
    Rng rng(3);
    auto f = MlpField::create(test::random_params(test::tiny_config(), 3, 0.05));
    const Points seeds = test::random_points(3, 200, rng);
    std::vector<char> ok;
    const Points out = sdf_descent_batch(*f, seeds, 4, 1e-3, &ok);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < seeds.cols(); ++j) {
        const auto single = sdf_descent(*f, Vector(seeds.col(j)), 4, 1e-3);
        ASSERT_EQ(bool(ok[static_cast<std::size_t>(j)]), single.has_value());
        if (single) {
            EXPECT_LT((out.col(k) - *single).norm(), 1e-14);
            ++k;
        }
    }
    EXPECT_EQ(out.cols(), k);
}

TEST(Bank, SphereBankLiesOnSurface) {
    const double r = 0.35;
    const auto s = AnalyticSdf::sphere(3, r);
    SamplingConfig cfg;
    cfg.bank_size = 20000;
    Rng rng(4);
    const auto bank = refresh_bank(s, BoundingBox::unit(3), cfg, rng, 7, 128);
    ASSERT_EQ(bank.points.cols(), 20000);
    EXPECT_EQ(bank.refreshed_at_iteration, 7);
    EXPECT_GT(bank.triangle_count, 0u);
    const double diag = std::sqrt(3.0) / 127.0;
    double mean = 0.0;
    for (Eigen::Index j = 0; j < bank.points.cols(); ++j) {
        const double n = bank.points.col(j).norm();
        EXPECT_LT(std::abs(n - r), 2 * diag);
        mean += n;
    }
    EXPECT_NEAR(mean / 20000.0, r, 0.01 * r);
    EXPECT_NEAR(bank.total_area, 4 * M_PI * r * r, 0.02 * 4 * M_PI * r * r);
}

TEST(Bank, CircleBank2D) {
    const auto c = AnalyticSdf::circle(0.3);
    SamplingConfig cfg;
    cfg.bank_size = 1000;
    Rng rng(5);
    const auto bank = refresh_bank(c, BoundingBox::unit(2), cfg, rng, 0, 256);
    ASSERT_EQ(bank.points.rows(), 2);
    ASSERT_EQ(bank.points.cols(), 1000);
    EXPECT_NEAR(bank.total_area, 2 * M_PI * 0.3, 0.01);
}

TEST(Bank, NoZeroLevelThrows) {
    const auto f = AnalyticSdf::sphere(3, -1.0);
    SamplingConfig cfg;
    Rng rng(6);
    EXPECT_THROW(refresh_bank(f, BoundingBox::unit(3), cfg, rng, 0, 32), EmptyLevelSet);
}

TEST(Bank, DeterministicGivenStream) {
    const auto s = AnalyticSdf::sphere(3, 0.3);
    SamplingConfig cfg;
    cfg.bank_size = 500;
    Rng a = Rng::stream(1, 2, StreamPurpose::BankRefresh);
    Rng b = Rng::stream(1, 2, StreamPurpose::BankRefresh);
    const auto ba = refresh_bank(s, BoundingBox::unit(3), cfg, a, 0, 32);
    const auto bb = refresh_bank(s, BoundingBox::unit(3), cfg, b, 0, 32);
    EXPECT_TRUE((ba.points.array() == bb.points.array()).all());
}

TEST(SurfaceDraw, ExactSdfAcceptsEverything) {
    const auto s = AnalyticSdf::sphere(3, 0.3);
    SamplingConfig cfg;
    cfg.bank_size = 5000;
    Rng rng(7);
    const auto bank = refresh_bank(s, BoundingBox::unit(3), cfg, rng, 0, 64);
    const auto draw = draw_surface_samples(bank, s, 1000, cfg, rng);
    EXPECT_EQ(draw.requested, 1000u);
    EXPECT_DOUBLE_EQ(draw.accept_ratio, 1.0);
    EXPECT_FALSE(draw.stale);
    ASSERT_EQ(draw.points.cols(), 1000);
    for (Eigen::Index j = 0; j < draw.points.cols(); ++j) {
        EXPECT_LE(std::abs(s.eval(draw.points.col(j))), cfg.accept_tol);
    }
    const auto none = draw_surface_samples(bank, s, 0, cfg, rng);
    EXPECT_EQ(none.points.cols(), 0);
}

TEST(SurfaceDraw, MlpSamplesSatisfyTolerance) {
    FieldConfig fc = test::tiny_config();
    auto f = MlpField::create(init_geometric(fc, 8));
    SamplingConfig cfg;
    cfg.bank_size = 3000;
    Rng rng(8);
    const auto bank = refresh_bank(*f, BoundingBox::unit(3), cfg, rng, 0, 48);
    const auto draw = draw_surface_samples(bank, *f, 2000, cfg, rng);
    EXPECT_GT(draw.points.cols(), 0);
    for (Eigen::Index j = 0; j < draw.points.cols(); ++j) {
        EXPECT_LE(std::abs(f->eval(draw.points.col(j))), cfg.accept_tol);
    }
}

TEST(SurfaceDraw, MovedSurfaceMarksBankStale) {
    SamplingConfig cfg;
    cfg.bank_size = 2000;
    cfg.descent_steps = 1;
    Rng rng(9);
    const auto bank = refresh_bank(AnalyticSdf::sphere(3, 0.3), BoundingBox::unit(3), cfg, rng, 0, 48);
    // Scaled field: one descent step leaves a residual far above ε.
    const auto moved = AnalyticSdf::sphere(3, 0.1).scaled(0.3);
    const auto draw = draw_surface_samples(bank, moved, 500, cfg, rng);
    EXPECT_LT(draw.accept_ratio, 0.1);
    EXPECT_TRUE(draw.stale);
}

TEST(Eikonal, CountsGlobalPlusBatch) {
    Rng rng(10);
    const Points cloud = test::random_points(3, 6000, rng, 0.4);
    SamplingConfig cfg;
    const auto spec = EikonalSampleSpec::build(cloud, cfg);
    std::vector<Eigen::Index> batch(5000);
    for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = static_cast<Eigen::Index>(i);
    const auto domain = BoundingBox::unit(3);
    const Points s = eikonal_sample_points(cloud, batch, spec, domain, rng);
    ASSERT_EQ(s.cols(), 5625);
    for (Eigen::Index j = 0; j < 625; ++j) {
        EXPECT_TRUE((s.col(j).array() >= domain.lower.array()).all());
        EXPECT_TRUE((s.col(j).array() <= domain.upper.array()).all());
    }
}

/// σ_i = scale × distance to the rank-th other point, by brute force.
double brute_sigma(const Points& cloud, Eigen::Index i, int rank, double scale) {
    std::vector<double> d;
    for (Eigen::Index j = 0; j < cloud.cols(); ++j) {
        if (j != i) d.push_back((cloud.col(j) - cloud.col(i)).norm());
    }
    std::sort(d.begin(), d.end());
    return scale * d[static_cast<std::size_t>(rank - 1)];
}

TEST(Eikonal, SigmaMatchesBruteForceOnGrid) {
    Points grid(3, 512);
    Eigen::Index k = 0;
    for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b)
            for (int c = 0; c < 8; ++c) grid.col(k++) = Eigen::Vector3d(a, b, c);
    SamplingConfig cfg;
    const auto spec = EikonalSampleSpec::build(grid, cfg);
    for (Eigen::Index i = 0; i < grid.cols(); i += 7) {
        EXPECT_DOUBLE_EQ(spec.sigma[i], brute_sigma(grid, i, 50, 0.2));
    }
    EXPECT_TRUE((spec.sigma.array() > 0).all());
}

TEST(Eikonal, SmallCloudUsesLastNeighbor) {
    Rng rng(11);
    const Points cloud = test::random_points(2, 10, rng);
    SamplingConfig cfg;
    const auto spec = EikonalSampleSpec::build(cloud, cfg);
    for (Eigen::Index i = 0; i < 10; ++i) EXPECT_DOUBLE_EQ(spec.sigma[i], brute_sigma(cloud, i, 9, 0.2));
}

TEST(Eikonal, DuplicatePointsKeepPositiveSigma) {
    Points cloud = Points::Zero(3, 60);
    cloud.col(59) = Eigen::Vector3d(0.1, 0, 0);
    SamplingConfig cfg;
    const auto spec = EikonalSampleSpec::build(cloud, cfg);
    EXPECT_TRUE((spec.sigma.array() > 0).all());
}

TEST(Eikonal, DeterministicGivenStream) {
    Rng rng(12);
    const Points cloud = test::random_points(3, 100, rng);
    SamplingConfig cfg;
    const auto spec = EikonalSampleSpec::build(cloud, cfg);
    std::vector<Eigen::Index> batch{1, 5, 9};
    Rng a = Rng::stream(3, 4, StreamPurpose::Eikonal);
    Rng b = Rng::stream(3, 4, StreamPurpose::Eikonal);
    const Points pa = eikonal_sample_points(cloud, batch, spec, BoundingBox::unit(3), a);
    const Points pb = eikonal_sample_points(cloud, batch, spec, BoundingBox::unit(3), b);
    EXPECT_TRUE((pa.array() == pb.array()).all());
}

TEST(SamplingConfig, Validation) {
    SamplingConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.descent_steps = 0;
    EXPECT_THROW(cfg.validate(), InputError);
    cfg = SamplingConfig{};
    cfg.accept_tol = 0.0;
    EXPECT_THROW(cfg.validate(), InputError);
    cfg = SamplingConfig{};
    cfg.K_mesh = 0;
    EXPECT_THROW(cfg.validate(), InputError);
}

}  // namespace
}  // namespace diffcd
