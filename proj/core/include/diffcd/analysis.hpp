#pragma once

#include "diffcd/field.hpp"
#include "diffcd/mesher.hpp"
#include "diffcd/rng.hpp"
#include "diffcd/trainer.hpp"
#include "diffcd/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace diffcd {

// ---------------------------------------------------------------------------
// SSA convergence experiment

struct SsaExperiment {
    const ScalarField* field = nullptr;
    BoundingBox domain = BoundingBox::unit(3);
    std::vector<double> alphas{10.0, 100.0, 1000.0};
    std::size_t K = 5000;
    int repeats = 100;
    int mesh_resolution = 128;

    void validate() const;
};

struct SsaRow {
    double alpha = 0.0;
    double mean = 0.0;
    double stdev = 0.0;  // sample standard deviation over repeats
    double mesh_oracle = 0.0;  // ∫_S 1/‖∇f‖ by mesh quadrature
    double area = 0.0;
};

struct SsaReport {
    std::vector<SsaRow> rows;
    double median_grad_norm = 0.0;  // over mesh face centroids

    void write_csv(const std::filesystem::path& path) const;
    /// Estimate vs α (log axis) with ±1 stdev bars and the oracle as a reference line.
    void write_svg(const std::filesystem::path& path) const;
};

/// Repeats are drawn from independent streams keyed by (seed, α index, repeat).
SsaReport run_ssa_experiment(const SsaExperiment& exp, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Toy circle: f(θ, x) = ‖x‖ - θ fitted to points on a circle of radius r

struct ToyCircleSpec {
    double radius = 0.5;
    double mu = 0.1;
    int p = 2;

    void validate() const;
};

/// |r - θ|^p + μ(2πθ + (π/α) e^{-αθ}).
double toy_circle_loss(const ToyCircleSpec& spec, double theta, double alpha);
double toy_circle_loss_derivative(const ToyCircleSpec& spec, double theta, double alpha);

/// Minimizer of the α → ∞ loss |r - θ|^p + 2πμθ over θ ≥ 0.
double toy_circle_minimizer(const ToyCircleSpec& spec);

/// Projected gradient descent on θ ≥ 0 with step lr·(1 - k/steps). Throws
/// NumericalError if θ leaves [0, 10r] or becomes non-finite.
double toy_circle_descent(const ToyCircleSpec& spec, double theta0, double alpha, long steps = 200000,
                          double lr = 1e-4);

// ---------------------------------------------------------------------------
// Synthetic 2D shapes

/// Union of closed polygons; each loop is a 2 x V matrix of vertices in order.
struct Shape2D {
    std::string name;
    std::vector<Points> loops;

    double perimeter() const;
    /// n points uniform by arc length with outward edge normals.
    PointCloud sample_uniform(std::size_t n, Rng& rng) const;
    /// n points evenly spaced by arc length starting at the first vertex.
    PointCloud sample_even(std::size_t n) const;
};

/// Boundary of two overlapping axis-aligned rectangles forming a plus sign.
Shape2D cross_shape();
Shape2D square_shape(double half_side);
Shape2D circle_shape(double radius, int segments = 4096);

enum class DemoShape { Cross, SparseBox, NoisyCircle };
DemoShape parse_demo_shape(const std::string& name);
std::string to_string(DemoShape s);

struct DemoCloud {
    PointCloud cloud;  // the fitting input
    Shape2D reference;  // the analytic generator
};

/// cross: 200 points; sparse-box: 16 points; noisy-circle: r = 0.3, 500 points, σ = 0.02.
DemoCloud generate_demo_cloud(DemoShape shape, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Contour analysis

struct ContourSummary {
    double length = 0.0;
    int components = 0;
    int spurious_components = 0;  // min distance to the cloud above the threshold
    double max_component_distance = 0.0;
};

/// Component-wise distances from a contour to a point set.
ContourSummary summarize_contour(const Contour2D& contour, const Points& cloud, double spurious_threshold = 0.05);

/// Symmetric Chamfer distance between n uniform contour samples and `target`.
double contour_chamfer(const Contour2D& contour, const Points& target, std::size_t n, Rng& rng);

// ---------------------------------------------------------------------------
// λ sweep

struct LambdaSweepRow {
    double lambda = 0.0;
    double chamfer = 0.0;  // surface samples vs. cloud
    double measure = 0.0;  // contour length (2D) or mesh area (3D)
    double grad_norm_median = 0.0;  // over local samples near the cloud
    std::vector<double> grad_norm_histogram;  // fraction per bin over [0, 2]
    bool degenerate_risk = false;  // λ = 0
};

struct LambdaSweepReport {
    std::vector<LambdaSweepRow> rows;
    static constexpr int kBins = 20;

    void write_csv(const std::filesystem::path& path) const;
};

LambdaSweepReport lambda_sweep(const PointCloud& cloud, const std::vector<double>& lambdas,
                               const TrainConfig& base, int extract_resolution = 256,
                               std::size_t metric_samples = 2000);

}  // namespace diffcd
