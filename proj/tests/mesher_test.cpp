#include "diffcd/mesher.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

namespace diffcd {
namespace {

const double kSphereArea = 4 * M_PI * 0.35 * 0.35;

TEST(MarchingCubes, SphereArea) {
    const auto mesh = marching_cubes(AnalyticSdf::sphere(3, 0.35), BoundingBox::unit(3), 64);
    EXPECT_NO_THROW(mesh.validate());
    EXPECT_NEAR(mesh.total_area, kSphereArea, 0.02 * kSphereArea);
}

TEST(MarchingCubes, PlaneCrossSection) {
    const auto mesh = marching_cubes(AnalyticSdf::plane(Eigen::Vector3d(1, 0, 0), 0.0), BoundingBox::unit(3), 32);
    EXPECT_NEAR(mesh.total_area, 1.0, 0.01);
}

TEST(MarchingCubes, NoCrossingThrows) {
    EXPECT_THROW(marching_cubes(AnalyticSdf::sphere(3, -1.0), BoundingBox::unit(3), 16), EmptyLevelSet);
}

TEST(MarchingCubes, CoarsestGridStillValid) {
    const auto mesh = marching_cubes(AnalyticSdf::plane(Eigen::Vector3d(1, 1, 0), 0.1), BoundingBox::unit(3), 2);
    EXPECT_FALSE(mesh.empty());
    EXPECT_NO_THROW(mesh.validate());
}

TEST(MarchingCubes, VerticesRespectInterpolationBound) {
    // For a 1-Lipschitz field, both endpoints of a crossing edge lie within one
    // edge length h of the surface, so the interpolated vertex does too.
    const auto f = AnalyticSdf::sphere(3, 0.31);
    const int res = 40;
    const auto mesh = marching_cubes(f, BoundingBox::unit(3), res);
    const double h = 1.0 / (res - 1);
    for (Eigen::Index j = 0; j < mesh.vertices.cols(); ++j) EXPECT_LE(std::abs(f.eval(mesh.vertices.col(j))), h);
}

TEST(MarchingCubes, FacesOrientedWithGradient) {
    const auto mesh = marching_cubes(AnalyticSdf::sphere(3, 0.3), BoundingBox::unit(3), 32);
    for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
        const auto& t = mesh.faces[i];
        const Eigen::Vector3d c =
            (mesh.vertices.col(t[0]) + mesh.vertices.col(t[1]) + mesh.vertices.col(t[2])) / 3.0;
        if (mesh.face_areas[i] > 0) EXPECT_GT(mesh.face_normals.col(static_cast<Eigen::Index>(i)).dot(c), 0.0);
    }
}

TEST(MarchingCubes, AreaInvariantUnderVertexOrder) {
    auto mesh = marching_cubes(AnalyticSdf::sphere(3, 0.3), BoundingBox::unit(3), 24);
    const double area = mesh.total_area;
    for (auto& t : mesh.faces) t = {t[1], t[2], t[0]};
    mesh.update_geometry();
    EXPECT_NEAR(mesh.total_area, area, 1e-14);
    for (auto& t : mesh.faces) std::swap(t[0], t[1]);
    mesh.update_geometry();
    EXPECT_NEAR(mesh.total_area, area, 1e-14);
}

TEST(MarchingCubes, RefinementConvergesMonotonically) {
    const auto f = AnalyticSdf::sphere(3, 0.35);
    double prev_area = marching_cubes(f, BoundingBox::unit(3), 16).total_area;
    double prev_change = std::numeric_limits<double>::infinity();
    for (int res : {32, 64, 128}) {
        const double area = marching_cubes(f, BoundingBox::unit(3), res).total_area;
        const double change = std::abs(area / prev_area - 1.0);
        EXPECT_LT(change, prev_change) << res;
        prev_change = change;
        prev_area = area;
    }
}

TEST(MarchingCubes, Deterministic) {
    Rng rng(1);
    auto f = MlpField::create(test::random_params(test::tiny_config(), 1, 0.05));
    const auto a = marching_cubes(*f, BoundingBox::unit(3), 20);
    const auto b = marching_cubes(*f, BoundingBox::unit(3), 20);
    EXPECT_TRUE((a.vertices.array() == b.vertices.array()).all());
    EXPECT_EQ(a.faces, b.faces);
}

TEST(MarchingSquares, CircleLength) {
    const auto c = marching_squares(AnalyticSdf::circle(0.3), BoundingBox::unit(2), 256);
    EXPECT_NEAR(c.total_length, 2 * M_PI * 0.3, 0.01 * 2 * M_PI * 0.3);
    EXPECT_EQ(c.components().size(), 1u);
}

TEST(MarchingSquares, VerticalLine) {
    const auto c = marching_squares(AnalyticSdf::plane(Eigen::Vector2d(1, 0), 0.0), BoundingBox::unit(2), 33);
    EXPECT_NEAR(c.total_length, 1.0, 1e-12);
    EXPECT_EQ(c.components().size(), 1u);
    for (Eigen::Index j = 0; j < c.vertices.cols(); ++j) EXPECT_NEAR(c.vertices(0, j), 0.0, 1e-15);
}

TEST(MarchingSquares, NoCrossingIsEmpty) {
    EXPECT_TRUE(marching_squares(AnalyticSdf::circle(-0.1), BoundingBox::unit(2), 64).empty());
}

TEST(MarchingSquares, SeparateLoopsAreSeparateComponents) {
    struct TwoCircles final : ScalarField {
        int dim() const override { return 2; }
        void evaluate(const Points& x, Vector& v, Points* g) const override {
            const auto a = AnalyticSdf::sphere(Eigen::Vector2d(-0.2, 0), 0.1);
            const auto b = AnalyticSdf::sphere(Eigen::Vector2d(0.2, 0), 0.1);
            Vector va, vb;
            Points ga, gb;
            a.evaluate(x, va, &ga);
            b.evaluate(x, vb, &gb);
            v = va.cwiseMin(vb);
            if (g) {
                *g = ga;
                for (Eigen::Index j = 0; j < x.cols(); ++j)
                    if (vb[j] < va[j]) g->col(j) = gb.col(j);
            }
        }
    };
    const auto c = marching_squares(TwoCircles{}, BoundingBox::unit(2), 128);
    EXPECT_EQ(c.components().size(), 2u);
}

TEST(MeshSampling, BinomialFaceSplit) {
    TriangleMesh mesh;
    mesh.vertices.resize(3, 6);
    // Face 0: area 1. Face 1: area 3.
    mesh.vertices << 0, 2, 0, 0, 6, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 5, 5, 5;
    mesh.faces = {{0, 1, 2}, {3, 4, 5}};
    mesh.update_geometry();
    ASSERT_NEAR(mesh.face_areas[0], 1.0, 1e-15);
    ASSERT_NEAR(mesh.face_areas[1], 3.0, 1e-15);
    Rng rng(2);
    std::vector<int> ids;
    sample_mesh_uniform(mesh, 40000, rng, nullptr, &ids);
    const auto second = std::count(ids.begin(), ids.end(), 1);
    EXPECT_GE(second, 29400);
    EXPECT_LE(second, 30600);
}

TEST(MeshSampling, SingleTrianglePointsAreInside) {
    TriangleMesh mesh;
    mesh.vertices.resize(3, 3);
    mesh.vertices << 0.1, 0.9, 0.2, 0.0, 0.3, 0.8, 0.5, 0.1, -0.2;
    mesh.faces = {{0, 1, 2}};
    mesh.update_geometry();
    Rng rng(3);
    const Points p = sample_mesh_uniform(mesh, 2000, rng);
    Eigen::Matrix3d basis;
    basis.col(0) = mesh.vertices.col(0);
    basis.col(1) = mesh.vertices.col(1);
    basis.col(2) = mesh.vertices.col(2);
    // Solve with the sum-to-one row appended to recover barycentric coordinates.
    Eigen::Matrix<double, 4, 3> a;
    a.topRows<3>() = basis;
    a.row(3).setOnes();
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
        Eigen::Vector4d rhs;
        rhs << p.col(j), 1.0;
        const Eigen::Vector3d bary = a.colPivHouseholderQr().solve(rhs);
        EXPECT_GE(bary.minCoeff(), -1e-12);
        EXPECT_NEAR(bary.sum(), 1.0, 1e-12);
    }
    Rng one(4);
    EXPECT_EQ(sample_mesh_uniform(mesh, 1, one).cols(), 1);
}

TEST(MeshSampling, ChiSquareAgainstAreaWeights) {
    TriangleMesh mesh;
    mesh.vertices.resize(3, 30);
    for (int f = 0; f < 10; ++f) {
        const double s = 0.5 + 0.3 * f;  // face f has area s²/2
        mesh.vertices.col(3 * f) = Eigen::Vector3d(0, 0, f);
        mesh.vertices.col(3 * f + 1) = Eigen::Vector3d(s, 0, f);
        mesh.vertices.col(3 * f + 2) = Eigen::Vector3d(0, s, f);
        mesh.faces.push_back({3 * f, 3 * f + 1, 3 * f + 2});
    }
    mesh.update_geometry();
    const std::size_t n = 100000;
    Rng rng(5);
    std::vector<int> ids;
    sample_mesh_uniform(mesh, n, rng, nullptr, &ids);
    std::vector<double> counts(10, 0.0);
    for (int id : ids) counts[static_cast<std::size_t>(id)] += 1.0;
    double chi2 = 0.0;
    for (std::size_t f = 0; f < 10; ++f) {
        const double expected = double(n) * mesh.face_areas[f] / mesh.total_area;
        chi2 += (counts[f] - expected) * (counts[f] - expected) / expected;
    }
    EXPECT_LT(chi2, 27.877);  // χ²(9) quantile at p = 0.001
}

TEST(MeshSampling, EmptyMeshRejected) {
    Rng rng(6);
    EXPECT_ANY_THROW(sample_mesh_uniform(TriangleMesh{}, 10, rng));
}

TEST(MeshSampling, DeterministicPerSeed) {
    const auto mesh = marching_cubes(AnalyticSdf::sphere(3, 0.3), BoundingBox::unit(3), 16);
    Rng a(7), b(7);
    EXPECT_TRUE((sample_mesh_uniform(mesh, 100, a).array() == sample_mesh_uniform(mesh, 100, b).array()).all());
}

TEST(ContourSampling, NormalsFollowField) {
    const auto f = AnalyticSdf::circle(0.3);
    const auto c = marching_squares(f, BoundingBox::unit(2), 128);
    Rng rng(8);
    Points normals;
    const Points p = sample_contour_uniform(c, 500, rng, &normals, &f);
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
        EXPECT_NEAR(p.col(j).norm(), 0.3, 1e-3);
        EXPECT_GT(normals.col(j).dot(p.col(j)), 0.0);
        EXPECT_NEAR(normals.col(j).norm(), 1.0, 1e-12);
    }
}

TEST(SurfaceIntegral, ExactSdfGivesArea) {
    const auto f = AnalyticSdf::sphere(3, 0.35);
    const auto mesh = marching_cubes(f, BoundingBox::unit(3), 48);
    EXPECT_NEAR(surface_integral_inv_gradnorm(mesh, f), mesh.total_area, 1e-10 * mesh.total_area);
    EXPECT_NEAR(surface_integral_inv_gradnorm(mesh, f.scaled(0.5)), 2 * mesh.total_area, 1e-6);
}

TEST(SurfaceIntegral, ContourVersion) {
    const auto f = AnalyticSdf::circle(0.3);
    const auto c = marching_squares(f, BoundingBox::unit(2), 128);
    EXPECT_NEAR(surface_integral_inv_gradnorm(c, f.scaled(0.25)), 4 * c.total_length, 1e-9);
}

TEST(SurfaceIntegral, VanishingGradientRejected) {
    const auto mesh = marching_cubes(AnalyticSdf::sphere(3, 0.3), BoundingBox::unit(3), 8);
    EXPECT_THROW(surface_integral_inv_gradnorm(mesh, AnalyticSdf::constant(3, 0.0)), NumericalError);
}

TEST(SampleLevelSet, DispatchesOnDimension) {
    Rng rng(9);
    double measure = 0.0;
    const Points p3 = sample_level_set(AnalyticSdf::sphere(3, 0.3), BoundingBox::unit(3), 32, 50, rng, nullptr, &measure);
    EXPECT_EQ(p3.rows(), 3);
    EXPECT_NEAR(measure, 4 * M_PI * 0.09, 0.05);
    const Points p2 = sample_level_set(AnalyticSdf::circle(0.3), BoundingBox::unit(2), 64, 50, rng);
    EXPECT_EQ(p2.rows(), 2);
    EXPECT_THROW(sample_level_set(AnalyticSdf::circle(-0.3), BoundingBox::unit(2), 64, 50, rng), EmptyLevelSet);
}

TEST(MeshIo, ObjRoundTrip) {
    const auto mesh = marching_cubes(AnalyticSdf::sphere(3, 0.3), BoundingBox::unit(3), 12);
    const auto path = std::filesystem::temp_directory_path() / "diffcd_mesher_test.obj";
    write_obj(path, mesh);
    const auto back = read_obj(path);
    std::filesystem::remove(path);
    EXPECT_EQ(back.faces, mesh.faces);
    ASSERT_EQ(back.vertices.cols(), mesh.vertices.cols());
    EXPECT_LT((back.vertices - mesh.vertices).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_NEAR(back.total_area, mesh.total_area, 1e-6);
}

TEST(MeshIo, ContourExports) {
    const auto c = marching_squares(AnalyticSdf::circle(0.3), BoundingBox::unit(2), 32);
    const auto dir = std::filesystem::temp_directory_path();
    write_contour_csv(dir / "diffcd_contour.csv", c);
    write_contour_svg(dir / "diffcd_contour.svg", c, BoundingBox::unit(2));
    std::ifstream csv(dir / "diffcd_contour.csv");
    std::string header;
    std::getline(csv, header);
    std::size_t rows = 0;
    for (std::string line; std::getline(csv, line);) ++rows;
    EXPECT_EQ(rows, c.segments.size());
    std::ifstream svg(dir / "diffcd_contour.svg");
    const std::string text((std::istreambuf_iterator<char>(svg)), {});
    EXPECT_NE(text.find("<svg"), std::string::npos);
    std::filesystem::remove(dir / "diffcd_contour.csv");
    std::filesystem::remove(dir / "diffcd_contour.svg");
}

}  // namespace
}  // namespace diffcd
