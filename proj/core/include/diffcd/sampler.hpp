#pragma once

#include "diffcd/field.hpp"
#include "diffcd/mesher.hpp"
#include "diffcd/rng.hpp"
#include "diffcd/types.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace diffcd {

struct SamplingConfig {
    int K_mesh = 1000;            // bank refresh period in iterations
    std::size_t bank_size = 100000;
    int descent_steps = 4;        // M
    double accept_tol = 1e-3;     // ε
    int train_mc_resolution = 128;
    int local_knn_k = 50;
    double local_std_scale = 0.2;
    std::size_t n_global = 625;
    std::size_t batch_surface = 5000;
    std::size_t batch_cloud = 5000;
    std::size_t ssa_samples = 5000;

    void validate() const;
    friend bool operator==(const SamplingConfig&, const SamplingConfig&) = default;
};

/// Maps original coordinates into the normalized frame: y = (x - center) / scale.
struct NormalizationTransform {
    Vector center;
    double scale = 1.0;

    Points apply(const Points& x) const;
    Points invert(const Points& y) const;
    TriangleMesh invert(const TriangleMesh& mesh) const;
    Contour2D invert(const Contour2D& contour) const;
};

/// Centers the bounding box at the origin and divides by its longest side, so the
/// result fits in [-0.5, 0.5]^d. Normals are carried unchanged.
std::pair<PointCloud, NormalizationTransform> normalize_cloud(const PointCloud& cloud);

/// M steps of x <- x - f ∇f/‖∇f‖. Empty when |f(x_M)| > ε or ‖∇f‖ < 1e-8 at any step.
std::optional<Vector> sdf_descent(const ScalarField& field, const Vector& p, int steps, double eps);

/// Batched descent. `accepted[j]` reports whether seed j converged; the returned
/// matrix holds the converged points in seed order.
Points sdf_descent_batch(const ScalarField& field, const Points& seeds, int steps, double eps,
                   std::vector<char>* accepted = nullptr);

struct SurfaceSampleBank {
    Points points;  // dim x bank_size, on the refresh-time mesh
    long refreshed_at_iteration = 0;
    std::size_t triangle_count = 0;  // segments in 2D
    double total_area = 0.0;         // length in 2D

    bool empty() const { return points.cols() == 0; }
};

/// Extracts the level set at `resolution` (train_mc_resolution when 0) and draws
/// bank_size points uniformly by area. Throws EmptyLevelSet when there is none.
SurfaceSampleBank refresh_bank(const ScalarField& field, const BoundingBox& domain,
                               const SamplingConfig& cfg, Rng& rng, long iteration = 0,
                               int resolution = 0);

struct SurfaceDraw {
    Points points;  // accepted samples, all with |f| <= ε
    std::size_t requested = 0;
    double accept_ratio = 1.0;
    bool stale = false;  // accept_ratio < 0.1: the bank should be rebuilt
};

SurfaceDraw draw_surface_samples(const SurfaceSampleBank& bank, const ScalarField& field,
                                 std::size_t k, const SamplingConfig& cfg, Rng& rng);

/// Per-cloud-point standard deviations for local eikonal samples.
struct EikonalSampleSpec {
    Vector sigma;  // σ_i = local_std_scale * (distance to the k-th neighbor)
    std::size_t n_global = 625;

    static EikonalSampleSpec build(const Points& cloud, const SamplingConfig& cfg);
};

/// n_global uniform points in Ω followed by one Gaussian perturbation of each batch
/// point (columns of `cloud` selected by `batch`) with its σ_i. Local points are
/// not clamped to Ω.
Points eikonal_sample_points(const Points& cloud, const std::vector<Eigen::Index>& batch,
                             const EikonalSampleSpec& spec, const BoundingBox& domain, Rng& rng);

Points uniform_in_box(const BoundingBox& domain, std::size_t n, Rng& rng);

}  // namespace diffcd
