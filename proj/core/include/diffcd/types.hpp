#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>

namespace diffcd {

/// Column-major point set: one point per column, `rows()` is the spatial dimension.
using Points = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error hierarchy. Each maps onto one CLI exit code.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad input: unreadable files, malformed configs, dimension mismatches.
struct InputError : Error {
    using Error::Error;
};

/// The zero-level set has no crossing inside the extraction domain.
struct EmptyLevelSet : Error {
    using Error::Error;
};

/// Non-finite loss or gradient, divergence, or an integrand that blows up.
struct NumericalError : Error {
    using Error::Error;
};

struct PointCloud {
    Points points;
    std::optional<Points> normals;

    int dim() const { return static_cast<int>(points.rows()); }
    Eigen::Index size() const { return points.cols(); }
    bool empty() const { return points.cols() == 0; }
};

/// Axis-aligned region Ω.
struct BoundingBox {
    Vector lower;
    Vector upper;

    static BoundingBox unit(int dim, double half_extent = 0.5) {
        return {Vector::Constant(dim, -half_extent), Vector::Constant(dim, half_extent)};
    }

    int dim() const { return static_cast<int>(lower.size()); }
    double volume() const { return (upper - lower).prod(); }
    Vector extent() const { return upper - lower; }

    void validate() const {
        if (lower.size() != upper.size() || lower.size() == 0) {
            throw InputError("bounding box corners have mismatched dimensions");
        }
        if (!((upper - lower).array() > 0.0).all()) {
            throw InputError("bounding box lower corner must be below upper corner");
        }
    }
};

inline void require_dim(const Points& x, int dim, const char* what) {
    if (x.rows() != dim) {
        throw InputError(std::string(what) + ": expected " + std::to_string(dim) +
                         "-dimensional points, got " + std::to_string(x.rows()));
    }
}

}  // namespace diffcd
