#pragma once

#include "diffcd/types.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace diffcd {

/// mean over a ∈ A of min_b ‖a - b‖.
double chamfer_one_sided(const Points& A, const Points& B);
/// ½ (CD(A→B) + CD(B→A)).
double chamfer(const Points& A, const Points& B);
/// As chamfer with squared distances inside the means.
double chamfer_squared(const Points& A, const Points& B);

/// Mean angle in degrees between each point's normal and the normal of its nearest
/// neighbor in the other set, averaged both ways. Evaluated with B's normals as
/// given and globally negated; the smaller mean is returned. Normals must be unit
/// length within 1e-6.
double chamfer_angle(const Points& A, const Points& normals_a, const Points& B, const Points& normals_b);

struct ShapeMetrics {
    double raw_cd = 0.0;
    double raw_cd2 = 0.0;
    double ca_degrees = 0.0;  // NaN when either side has no normals

    double cd() const { return raw_cd * 100.0; }
    double cd2() const { return raw_cd2 * 100.0 * 100.0; }
};

ShapeMetrics shape_metrics(const PointCloud& A, const PointCloud& B);

struct MetricsRow {
    std::string shape;
    std::string variant;
    ShapeMetrics metrics;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
};

/// Appends a row to the metrics CSV, writing the header when the file is new.
void append_metrics_csv(const std::filesystem::path& path, const MetricsRow& row);
std::string metrics_csv_header();
std::string metrics_csv_line(const MetricsRow& row);

}  // namespace diffcd
