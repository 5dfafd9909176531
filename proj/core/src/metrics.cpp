#include "diffcd/metrics.hpp"

#include "diffcd/field.hpp"
#include "diffcd/nearest_neighbor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace diffcd {

namespace {

void check_pair(const Points& A, const Points& B) {
    if (A.cols() == 0 || B.cols() == 0) throw InputError("chamfer: empty point set");
    if (A.rows() != B.rows()) throw InputError("chamfer: dimension mismatch");
}

/// Sum of nearest distances (or squared distances) from A into B, in index order.
double nearest_sum(const Points& A, const Points& B, bool squared) {
    const NearestNeighborIndex index(B);
    const auto nn = index.nearest_all(A);
    double s = 0.0;
    for (const auto& n : nn) s += squared ? n.distance * n.distance : n.distance;
    return s;
}

void check_unit(const Points& points, const Points& normals, const char* which) {
    if (normals.rows() != points.rows() || normals.cols() != points.cols()) {
        throw InputError(std::string("chamfer_angle: normals of ") + which + " do not match its points");
    }
    for (Eigen::Index j = 0; j < normals.cols(); ++j) {
        if (std::abs(normals.col(j).norm() - 1.0) > 1e-6) {
            throw InputError(std::string("chamfer_angle: non-unit normal in ") + which);
        }
    }
}

// Angle between unit vectors as 2 atan2(‖a-b‖, ‖a+b‖): exact zero for equal inputs,
// and negating b swaps the two arguments bit for bit.
double degrees(double diff, double sum) { return 2.0 * std::atan2(diff, sum) * 180.0 / std::numbers::pi; }

}  // namespace

double chamfer_one_sided(const Points& A, const Points& B) {
    check_pair(A, B);
    return nearest_sum(A, B, false) / static_cast<double>(A.cols());
}

double chamfer(const Points& A, const Points& B) {
    return 0.5 * (chamfer_one_sided(A, B) + chamfer_one_sided(B, A));
}

double chamfer_squared(const Points& A, const Points& B) {
    check_pair(A, B);
    return 0.5 * (nearest_sum(A, B, true) / static_cast<double>(A.cols()) +
                  nearest_sum(B, A, true) / static_cast<double>(B.cols()));
}

double chamfer_angle(const Points& A, const Points& normals_a, const Points& B, const Points& normals_b) {
    check_pair(A, B);
    check_unit(A, normals_a, "A");
    check_unit(B, normals_b, "B");
    // Negating B's normals exactly swaps the two branch sums, so the result is
    // invariant under a global flip of either input.
    double keep = 0.0;
    double flip = 0.0;
    auto accumulate = [&](const Points& P, const Points& nP, const Points& Q, const Points& nQ, double& k,
                          double& f) {
        const NearestNeighborIndex index(Q);
        const auto nn = index.nearest_all(P);
        double sk = 0.0;
        double sf = 0.0;
        for (Eigen::Index j = 0; j < P.cols(); ++j) {
            const auto p = nP.col(j);
            const auto q = nQ.col(nn[j].index);
            const double diff = (p - q).norm();
            const double sum = (p + q).norm();
            sk += degrees(diff, sum);
            sf += degrees(sum, diff);
        }
        k += sk / static_cast<double>(P.cols());
        f += sf / static_cast<double>(P.cols());
    };
    accumulate(A, normals_a, B, normals_b, keep, flip);
    accumulate(B, normals_b, A, normals_a, keep, flip);
    return 0.5 * std::min(keep, flip);
}

ShapeMetrics shape_metrics(const PointCloud& A, const PointCloud& B) {
    ShapeMetrics m;
    m.raw_cd = chamfer(A.points, B.points);
    m.raw_cd2 = chamfer_squared(A.points, B.points);
    m.ca_degrees = (A.normals && B.normals) ? chamfer_angle(A.points, *A.normals, B.points, *B.normals)
                                            : std::numeric_limits<double>::quiet_NaN();
    return m;
}

std::string metrics_csv_header() { return "shape,variant,cd,cd2,ca_deg,n_samples,seed"; }

std::string metrics_csv_line(const MetricsRow& row) {
    std::ostringstream out;
    out << row.shape << ',' << row.variant << ',' << format_double(row.metrics.cd()) << ','
        << format_double(row.metrics.cd2()) << ','
        << (std::isnan(row.metrics.ca_degrees) ? std::string("nan") : format_double(row.metrics.ca_degrees))
        << ',' << row.n_samples << ',' << row.seed;
    return out.str();
}

void append_metrics_csv(const std::filesystem::path& path, const MetricsRow& row) {
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    std::ofstream out(path, std::ios::app);
    if (!out) throw InputError("cannot open for writing: " + path.string());
    if (fresh) out << metrics_csv_header() << '\n';
    out << metrics_csv_line(row) << '\n';
}

}  // namespace diffcd
