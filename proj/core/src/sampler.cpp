#include "diffcd/sampler.hpp"

#include "diffcd/nearest_neighbor.hpp"
#include "diffcd/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace diffcd {

namespace {

constexpr double kGradFloor = 1e-8;

}  // namespace

void SamplingConfig::validate() const {
    if (K_mesh < 1) throw InputError("sampling.K_mesh must be >= 1");
    if (descent_steps < 1) throw InputError("sampling.descent_steps must be >= 1");
    if (!(accept_tol > 0.0)) throw InputError("sampling.accept_tol must be > 0");
    if (train_mc_resolution < 2) throw InputError("sampling.train_mc_resolution must be >= 2");
    if (local_knn_k < 1) throw InputError("sampling.local_knn_k must be >= 1");
    if (!(local_std_scale > 0.0)) throw InputError("sampling.local_std_scale must be > 0");
    if (bank_size < 1 || n_global < 1 || batch_surface < 1 || batch_cloud < 1 || ssa_samples < 1) {
        throw InputError("sampling counts must be >= 1");
    }
}

// ---------------------------------------------------------------------------
// Normalization

Points NormalizationTransform::apply(const Points& x) const {
    return (x.colwise() - center) / scale;
}

Points NormalizationTransform::invert(const Points& y) const {
    return (y * scale).colwise() + center;
}

TriangleMesh NormalizationTransform::invert(const TriangleMesh& mesh) const {
    TriangleMesh out = mesh;
    out.vertices = invert(mesh.vertices);
    out.update_geometry();
    return out;
}

Contour2D NormalizationTransform::invert(const Contour2D& contour) const {
    Contour2D out = contour;
    out.vertices = invert(contour.vertices);
    out.update_length();
    return out;
}

std::pair<PointCloud, NormalizationTransform> normalize_cloud(const PointCloud& cloud) {
    if (cloud.empty()) throw InputError("cannot normalize an empty point cloud");
    const Vector lo = cloud.points.rowwise().minCoeff();
    const Vector hi = cloud.points.rowwise().maxCoeff();
    const double side = (hi - lo).maxCoeff();
    if (!(side > 0.0)) throw InputError("cannot normalize a point cloud with zero extent");
    NormalizationTransform t{0.5 * (lo + hi), side};
    PointCloud out{t.apply(cloud.points), cloud.normals};
    return {std::move(out), std::move(t)};
}

// ---------------------------------------------------------------------------
// SDF descent

Points sdf_descent_batch(const ScalarField& field, const Points& seeds, int steps, double eps,
                   std::vector<char>* accepted) {
    if (steps < 1) throw InputError("sdf_descent needs at least one step");
    require_dim(seeds, field.dim(), "sdf_descent");
    const Eigen::Index n = seeds.cols();
    Points x = seeds;
    std::vector<char> alive(static_cast<std::size_t>(n), 1);
    Vector f;
    Points g;
    for (int step = 0; step < steps; ++step) {
        field.evaluate(x, f, &g);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!alive[j]) continue;
            const double gn = g.col(j).norm();
            if (!(gn >= kGradFloor) || !std::isfinite(f[j])) {
                alive[j] = 0;
                continue;
            }
            x.col(j) -= (f[j] / gn) * g.col(j);
        }
    }
    field.evaluate(x, f, nullptr);
    Eigen::Index kept = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (alive[j] && std::abs(f[j]) <= eps) {
            x.col(kept++) = x.col(j);
        } else {
            alive[j] = 0;
        }
    }
    x.conservativeResize(Eigen::NoChange, kept);
    if (accepted) *accepted = std::move(alive);
    return x;
}

std::optional<Vector> sdf_descent(const ScalarField& field, const Vector& p, int steps, double eps) {
    Points seeds = p;
    Points out = sdf_descent_batch(field, seeds, steps, eps);
    if (out.cols() == 0) return std::nullopt;
    return Vector(out.col(0));
}

// ---------------------------------------------------------------------------
// Surface bank

SurfaceSampleBank refresh_bank(const ScalarField& field, const BoundingBox& domain,
                               const SamplingConfig& cfg, Rng& rng, long iteration, int resolution) {
    const int res = resolution > 0 ? resolution : cfg.train_mc_resolution;
    SurfaceSampleBank bank;
    bank.refreshed_at_iteration = iteration;
    if (field.dim() == 3) {
        const TriangleMesh mesh = marching_cubes(field, domain, res);
        bank.points = sample_mesh_uniform(mesh, cfg.bank_size, rng);
        bank.triangle_count = mesh.faces.size();
        bank.total_area = mesh.total_area;
    } else {
        const Contour2D contour = marching_squares(field, domain, res);
        if (contour.empty()) throw EmptyLevelSet("marching squares found no zero crossing in the domain");
        bank.points = sample_contour_uniform(contour, cfg.bank_size, rng);
        bank.triangle_count = contour.segments.size();
        bank.total_area = contour.total_length;
    }
    return bank;
}

SurfaceDraw draw_surface_samples(const SurfaceSampleBank& bank, const ScalarField& field,
                                 std::size_t k, const SamplingConfig& cfg, Rng& rng) {
    if (bank.empty()) throw InputError("surface sample bank is empty");
    SurfaceDraw draw;
    draw.requested = k;
    if (k == 0) {
        draw.points.resize(field.dim(), 0);
        return draw;
    }
    Points seeds(bank.points.rows(), static_cast<Eigen::Index>(k));
    const auto bank_n = static_cast<std::size_t>(bank.points.cols());
    for (Eigen::Index j = 0; j < seeds.cols(); ++j) {
        seeds.col(j) = bank.points.col(static_cast<Eigen::Index>(rng.index(bank_n)));
    }
    draw.points = sdf_descent_batch(field, seeds, cfg.descent_steps, cfg.accept_tol);
    draw.accept_ratio = static_cast<double>(draw.points.cols()) / static_cast<double>(k);
    draw.stale = draw.accept_ratio < 0.1;
    return draw;
}

// ---------------------------------------------------------------------------
// Eikonal samples

EikonalSampleSpec EikonalSampleSpec::build(const Points& cloud, const SamplingConfig& cfg) {
    if (cloud.cols() == 0) throw InputError("eikonal sample spec over an empty cloud");
    EikonalSampleSpec spec;
    spec.n_global = cfg.n_global;
    const auto n = static_cast<std::size_t>(cloud.cols());
    spec.sigma.resize(cloud.cols());
    if (n == 1) {
        spec.sigma.setConstant(cfg.local_std_scale * 0.01);
        return spec;
    }
    const std::size_t rank = std::min<std::size_t>(static_cast<std::size_t>(cfg.local_knn_k), n - 1);
    const NearestNeighborIndex index(cloud);
    constexpr std::size_t kBlock = 512;
    parallel::for_blocks(parallel::block_count(n, kBlock), [&](std::size_t b) {
        const std::size_t end = std::min(n, (b + 1) * kBlock);
        for (std::size_t i = b * kBlock; i < end; ++i) {
            const auto col = static_cast<Eigen::Index>(i);
            // rank + 1 neighbors: the point itself comes first.
            const auto nn = index.k_nearest(cloud.col(col), rank + 1);
            spec.sigma[col] = cfg.local_std_scale * nn.back().distance;
        }
    });
    // Duplicated points give σ = 0; borrow the smallest positive σ instead.
    double floor = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < spec.sigma.size(); ++i) {
        if (spec.sigma[i] > 0.0) floor = std::min(floor, spec.sigma[i]);
    }
    if (!std::isfinite(floor)) floor = cfg.local_std_scale * 0.01;
    for (Eigen::Index i = 0; i < spec.sigma.size(); ++i) {
        if (!(spec.sigma[i] > 0.0)) spec.sigma[i] = floor;
    }
    return spec;
}

Points uniform_in_box(const BoundingBox& domain, std::size_t n, Rng& rng) {
    Points out(domain.dim(), static_cast<Eigen::Index>(n));
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        for (int d = 0; d < domain.dim(); ++d) out(d, j) = rng.uniform(domain.lower[d], domain.upper[d]);
    }
    return out;
}

Points eikonal_sample_points(const Points& cloud, const std::vector<Eigen::Index>& batch,
                             const EikonalSampleSpec& spec, const BoundingBox& domain, Rng& rng) {
    if (spec.sigma.size() != cloud.cols()) throw InputError("eikonal sample spec does not match the cloud");
    const auto n_global = static_cast<Eigen::Index>(spec.n_global);
    Points out(cloud.rows(), n_global + static_cast<Eigen::Index>(batch.size()));
    out.leftCols(n_global) = uniform_in_box(domain, spec.n_global, rng);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const Eigen::Index i = batch[b];
        const auto col = n_global + static_cast<Eigen::Index>(b);
        for (Eigen::Index d = 0; d < cloud.rows(); ++d) {
            out(d, col) = cloud(d, i) + rng.normal(0.0, spec.sigma[i]);
        }
    }
    return out;
}

}  // namespace diffcd
