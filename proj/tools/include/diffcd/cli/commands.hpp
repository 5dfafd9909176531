#pragma once

#include "diffcd/analysis.hpp"
#include "diffcd/cli/run_config.hpp"
#include "diffcd/metrics.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace diffcd::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitCheckFailed = 1,  // verify: an assertion did not hold
    kExitUsage = 2,        // usage or input error
    kExitEmptyLevelSet = 3,
    kExitNumerical = 4,
};

/// Entry point shared by the executable and the tests. `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Maps the library error hierarchy onto exit codes.
int exit_code_for(const std::exception& e);

struct DemoResult {
    PointCloud cloud;
    Contour2D contour;            // empty when the fitted field has no zero crossing
    ContourSummary summary;       // spurious components measured against the cloud
    double cd_cloud = 0.0;        // contour samples vs. cloud
    double cd_reference = 0.0;    // contour samples vs. the analytic generator
    ShapeMetrics metrics;         // against the generator, with normals
};

/// Generates the named cloud, fits it, extracts the contour, and writes
/// cloud.xyz, contour.svg, contour.csv, metrics.csv, and train_log.csv into
/// `out_dir` (skipped when empty). Infinite distances mark an empty contour.
DemoResult run_demo2d(DemoShape shape, const RunConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace diffcd::cli
