#include "diffcd/io.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

namespace diffcd {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("diffcd_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const std::string& text) {
        const fs::path p = dir_ / name;
        std::ofstream(p, std::ios::binary) << text;
        return p;
    }

    fs::path dir_;
};

TEST_F(IoTest, XyzInfersDimensionAndNormals) {
    const auto c3 = read_xyz(write("a.xyz", "# comment\n0 0 0\n1 2 3\n"));
    EXPECT_EQ(c3.dim(), 3);
    EXPECT_EQ(c3.size(), 2);
    EXPECT_FALSE(c3.normals.has_value());
    EXPECT_DOUBLE_EQ(c3.points(2, 1), 3.0);

    const auto c6 = read_xyz(write("b.xyz", "0 0 0 0 0 1\n1,2,3,1,0,0\n"));
    ASSERT_TRUE(c6.normals.has_value());
    EXPECT_DOUBLE_EQ((*c6.normals)(0, 1), 1.0);

    const auto c2 = read_xyz(write("c.xyz", "0.5 0.25\n-1 1\n"));
    EXPECT_EQ(c2.dim(), 2);
    const auto c4 = read_xyz(write("d.xyz", "0.5 0.25 0 1\n"));
    EXPECT_EQ(c4.dim(), 2);
    EXPECT_TRUE(c4.normals.has_value());
}

TEST_F(IoTest, XyzRejectsMalformedInput) {
    EXPECT_THROW(read_xyz(write("bad.xyz", "0 0 zero\n")), InputError);
    EXPECT_THROW(read_xyz(write("ragged.xyz", "0 0 0\n1 1\n")), InputError);
    EXPECT_THROW(read_xyz(write("empty.xyz", "# nothing\n")), InputError);
    EXPECT_THROW(read_xyz(write("five.xyz", "1 2 3 4 5\n")), InputError);
}

TEST_F(IoTest, AsciiPly) {
    const auto c = read_ply(write("a.ply",
                                  "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
                                  "property float z\nproperty float nx\nproperty float ny\nproperty float nz\n"
                                  "end_header\n0 0 0 0 0 1\n1 2 3 0 1 0\n"));
    EXPECT_EQ(c.size(), 2);
    EXPECT_DOUBLE_EQ(c.points(1, 1), 2.0);
    ASSERT_TRUE(c.normals.has_value());
    EXPECT_DOUBLE_EQ((*c.normals)(1, 1), 1.0);
}

TEST_F(IoTest, BinaryLittleEndianPly) {
    std::string text = "ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty double x\n"
                       "property double y\nproperty double z\nproperty uchar red\nend_header\n";
    const double pts[2][3] = {{0.125, -0.5, 0.75}, {1.0, 2.0, 3.0}};
    for (const auto& p : pts) {
        char buf[sizeof(double) * 3];
        std::memcpy(buf, p, sizeof(buf));
        text.append(buf, sizeof(buf));
        text.push_back('\x07');
    }
    const auto c = read_ply(write("b.ply", text));
    EXPECT_EQ(c.size(), 2);
    EXPECT_DOUBLE_EQ(c.points(0, 0), 0.125);
    EXPECT_DOUBLE_EQ(c.points(2, 1), 3.0);
    EXPECT_FALSE(c.normals.has_value());
}

TEST_F(IoTest, PlyRejectsUnsupportedLayouts) {
    EXPECT_THROW(read_ply(write("x.ply", "ply\nformat binary_big_endian 1.0\nelement vertex 1\nproperty float x\nend_header\n")),
                 InputError);
    EXPECT_THROW(read_ply(write("y.ply", "not a ply\n")), InputError);
    EXPECT_THROW(read_ply(write("z.ply", "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\n"
                                         "property float y\nproperty float z\nend_header\n0 0 0\n")),
                 InputError);
}

TEST_F(IoTest, DispatchAndMissingFile) {
    const auto p = dir_ / "nope.xyz";
    try {
        read_point_cloud(p);
        FAIL() << "expected InputError";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find(p.string()), std::string::npos);
    }
    const auto c = read_point_cloud(write("a.ply", "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n"
                                                   "property float y\nproperty float z\nend_header\n1 2 3\n"));
    EXPECT_EQ(c.size(), 1);
}

TEST_F(IoTest, XyzRoundTripIsExact) {
    PointCloud c;
    c.points.resize(3, 2);
    c.points << 0.1, 1.0 / 3.0, -2e-17, 5.5, 7, 1e300;
    c.normals = Points::Zero(3, 2);
    (*c.normals)(2, 0) = 1.0;
    (*c.normals)(0, 1) = -1.0;
    const auto p = dir_ / "rt.xyz";
    write_xyz(p, c);
    const auto back = read_xyz(p);
    EXPECT_TRUE((back.points.array() == c.points.array()).all());
    ASSERT_TRUE(back.normals.has_value());
    EXPECT_TRUE((back.normals->array() == c.normals->array()).all());
}

}  // namespace
}  // namespace diffcd
