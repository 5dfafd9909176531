#include "diffcd/analysis.hpp"

#include "diffcd/losses.hpp"
#include "diffcd/metrics.hpp"
#include "diffcd/nearest_neighbor.hpp"
#include "diffcd/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

namespace diffcd {

namespace {

constexpr double kPi = std::numbers::pi;

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open for writing: " + path.string());
    return out;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

std::vector<double> centroid_grad_norms(const ScalarField& field, const Points& centroids) {
    Vector f;
    Points g;
    field.evaluate(centroids, f, &g);
    std::vector<double> out(static_cast<std::size_t>(centroids.cols()));
    for (Eigen::Index j = 0; j < centroids.cols(); ++j) out[static_cast<std::size_t>(j)] = g.col(j).norm();
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// SSA experiment

void SsaExperiment::validate() const {
    if (!field) throw InputError("ssa experiment: no field");
    if (repeats < 2) throw InputError("ssa experiment: repeats must be >= 2");
    if (K < 1) throw InputError("ssa experiment: K must be >= 1");
    if (alphas.empty()) throw InputError("ssa experiment: empty alpha grid");
    for (double a : alphas) {
        if (!(a > 0.0)) throw InputError("ssa experiment: alphas must be > 0");
    }
    domain.validate();
    if (domain.dim() != field->dim()) throw InputError("ssa experiment: domain dimension mismatch");
}

SsaReport run_ssa_experiment(const SsaExperiment& exp, std::uint64_t seed) {
    exp.validate();
    const ScalarField& field = *exp.field;
    double oracle = 0.0;
    double area = 0.0;
    Points centroids;
    if (field.dim() == 3) {
        const TriangleMesh mesh = marching_cubes(field, exp.domain, exp.mesh_resolution);
        oracle = surface_integral_inv_gradnorm(mesh, field);
        area = mesh.total_area;
        centroids.resize(3, static_cast<Eigen::Index>(mesh.faces.size()));
        for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
            const auto& t = mesh.faces[f];
            centroids.col(static_cast<Eigen::Index>(f)) =
                (mesh.vertices.col(t[0]) + mesh.vertices.col(t[1]) + mesh.vertices.col(t[2])) / 3.0;
        }
    } else {
        const Contour2D contour = marching_squares(field, exp.domain, exp.mesh_resolution);
        if (contour.empty()) throw EmptyLevelSet("ssa experiment: the field has no zero level in the domain");
        oracle = surface_integral_inv_gradnorm(contour, field);
        area = contour.total_length;
        centroids.resize(2, static_cast<Eigen::Index>(contour.segments.size()));
        for (std::size_t s = 0; s < contour.segments.size(); ++s) {
            centroids.col(static_cast<Eigen::Index>(s)) =
                0.5 * (contour.vertices.col(contour.segments[s][0]) + contour.vertices.col(contour.segments[s][1]));
        }
    }

    SsaReport report;
    report.median_grad_norm = median(centroid_grad_norms(field, centroids));
    for (std::size_t a = 0; a < exp.alphas.size(); ++a) {
        std::vector<double> est(static_cast<std::size_t>(exp.repeats));
        for (int r = 0; r < exp.repeats; ++r) {
            Rng rng = Rng::stream(seed, (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(r),
                                  StreamPurpose::Experiment);
            est[static_cast<std::size_t>(r)] = ssa_loss(field, exp.domain, exp.alphas[a], exp.K, rng).value;
        }
        const double mean = std::accumulate(est.begin(), est.end(), 0.0) / static_cast<double>(est.size());
        double ss = 0.0;
        for (double e : est) ss += (e - mean) * (e - mean);
        report.rows.push_back({exp.alphas[a], mean, std::sqrt(ss / static_cast<double>(est.size() - 1)), oracle, area});
    }
    return report;
}

void SsaReport::write_csv(const std::filesystem::path& path) const {
    auto out = open_output(path);
    out << "alpha,mean,stdev,mesh_oracle,area,median_grad_norm\n";
    for (const auto& r : rows) {
        out << format_double(r.alpha) << ',' << format_double(r.mean) << ',' << format_double(r.stdev) << ','
            << format_double(r.mesh_oracle) << ',' << format_double(r.area) << ','
            << format_double(median_grad_norm) << '\n';
    }
}

void SsaReport::write_svg(const std::filesystem::path& path) const {
    if (rows.empty()) throw InputError("ssa report has no rows to plot");
    constexpr double W = 640, H = 400, M = 50;
    double xlo = std::log10(rows.front().alpha), xhi = xlo;
    double ylo = rows.front().mesh_oracle, yhi = ylo;
    for (const auto& r : rows) {
        xlo = std::min(xlo, std::log10(r.alpha));
        xhi = std::max(xhi, std::log10(r.alpha));
        ylo = std::min({ylo, r.mean - r.stdev, r.area});
        yhi = std::max({yhi, r.mean + r.stdev, r.area});
    }
    if (xhi == xlo) xhi = xlo + 1.0;
    const double pad = 0.05 * std::max(yhi - ylo, 1e-12);
    ylo -= pad;
    yhi += pad;
    auto X = [&](double alpha) { return M + (std::log10(alpha) - xlo) / (xhi - xlo) * (W - 2 * M); };
    auto Y = [&](double v) { return H - M - (v - ylo) / (yhi - ylo) * (H - 2 * M); };

    auto out = open_output(path);
    char buf[256];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%g\" y1=\"%.2f\" x2=\"%g\" y2=\"%.2f\" stroke=\"#d62728\" stroke-dasharray=\"6,4\"/>\n",
                  M, Y(rows.front().mesh_oracle), W - M, Y(rows.front().mesh_oracle));
    out << buf;
    std::string poly;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", X(r.alpha), Y(r.mean));
        poly += buf;
        std::snprintf(buf, sizeof(buf), "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#1f77b4\"/>\n",
                      X(r.alpha), Y(r.mean - r.stdev), X(r.alpha), Y(r.mean + r.stdev));
        out << buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.2f\" y=\"%g\" font-size=\"11\" text-anchor=\"middle\">%g</text>\n",
                      X(r.alpha), H - M + 16, r.alpha);
        out << buf;
    }
    out << "<polyline points=\"" << poly << "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n";
    std::snprintf(buf, sizeof(buf), "<text x=\"%g\" y=\"%g\" font-size=\"12\">SSA estimate vs alpha; dashed: mesh oracle %.4g</text>\n",
                  M, M - 15, rows.front().mesh_oracle);
    out << buf << "</svg>\n";
}

// ---------------------------------------------------------------------------
// Toy circle

void ToyCircleSpec::validate() const {
    if (!(radius > 0.0)) throw InputError("toy circle: radius must be > 0");
    if (!(mu >= 0.0)) throw InputError("toy circle: mu must be >= 0");
    if (p != 1 && p != 2) throw InputError("toy circle: p must be 1 or 2");
}

double toy_circle_loss(const ToyCircleSpec& s, double theta, double alpha) {
    const double d = std::abs(s.radius - theta);
    return (s.p == 1 ? d : d * d) + s.mu * (2.0 * kPi * theta + (kPi / alpha) * std::exp(-alpha * theta));
}

double toy_circle_loss_derivative(const ToyCircleSpec& s, double theta, double alpha) {
    const double diff = theta - s.radius;
    const double data = s.p == 1 ? (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0)) : 2.0 * diff;
    return data + s.mu * kPi * (2.0 - std::exp(-alpha * theta));
}

double toy_circle_minimizer(const ToyCircleSpec& s) {
    s.validate();
    if (s.p == 2) return std::max(0.0, s.radius - kPi * s.mu);
    // L = |r - θ| + 2πμθ is piecewise linear: slope 2πμ - 1 below r.
    return 2.0 * kPi * s.mu < 1.0 ? s.radius : 0.0;
}

double toy_circle_descent(const ToyCircleSpec& s, double theta0, double alpha, long steps, double lr) {
    s.validate();
    if (!(theta0 > 0.0)) throw InputError("toy circle descent: theta0 must be > 0");
    if (steps < 1 || !(lr > 0.0) || !(alpha > 0.0)) throw InputError("toy circle descent: bad schedule");
    double theta = theta0;
    for (long k = 0; k < steps; ++k) {
        const double eta = lr * (1.0 - static_cast<double>(k) / static_cast<double>(steps));
        theta = std::max(0.0, theta - eta * toy_circle_loss_derivative(s, theta, alpha));
        if (!std::isfinite(theta) || theta > 10.0 * s.radius) {
            throw NumericalError("toy circle descent diverged at step " + std::to_string(k));
        }
    }
    return theta;
}

// ---------------------------------------------------------------------------
// Shapes

double Shape2D::perimeter() const {
    double p = 0.0;
    for (const auto& loop : loops) {
        for (Eigen::Index i = 0; i < loop.cols(); ++i) p += (loop.col((i + 1) % loop.cols()) - loop.col(i)).norm();
    }
    return p;
}

namespace {

struct Edge {
    Eigen::Vector2d a;
    Eigen::Vector2d b;
    double length;
};

std::vector<Edge> edges_of(const Shape2D& shape) {
    std::vector<Edge> edges;
    for (const auto& loop : shape.loops) {
        for (Eigen::Index i = 0; i < loop.cols(); ++i) {
            const Eigen::Vector2d a = loop.col(i);
            const Eigen::Vector2d b = loop.col((i + 1) % loop.cols());
            edges.push_back({a, b, (b - a).norm()});
        }
    }
    return edges;
}

// Loops are counter-clockwise, so the outward normal is the edge direction turned clockwise.
Eigen::Vector2d outward(const Edge& e) {
    const Eigen::Vector2d d = (e.b - e.a) / e.length;
    return {d.y(), -d.x()};
}

}  // namespace

PointCloud Shape2D::sample_uniform(std::size_t n, Rng& rng) const {
    const auto edges = edges_of(*this);
    std::vector<double> cdf(edges.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < edges.size(); ++i) cdf[i] = (acc += edges[i].length);
    PointCloud cloud;
    cloud.points.resize(2, static_cast<Eigen::Index>(n));
    cloud.normals = Points(2, static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        const double u = rng.uniform(0.0, acc);
        const auto e = std::min<std::size_t>(
            static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()), edges.size() - 1);
        const double t = rng.uniform();
        const auto col = static_cast<Eigen::Index>(j);
        cloud.points.col(col) = (1.0 - t) * edges[e].a + t * edges[e].b;
        cloud.normals->col(col) = outward(edges[e]);
    }
    return cloud;
}

PointCloud Shape2D::sample_even(std::size_t n) const {
    const auto edges = edges_of(*this);
    const double total = perimeter();
    PointCloud cloud;
    cloud.points.resize(2, static_cast<Eigen::Index>(n));
    cloud.normals = Points(2, static_cast<Eigen::Index>(n));
    std::size_t e = 0;
    double start = 0.0;  // arc length at the start of edge e
    for (std::size_t j = 0; j < n; ++j) {
        const double s = total * static_cast<double>(j) / static_cast<double>(n);
        while (e + 1 < edges.size() && s >= start + edges[e].length) start += edges[e++].length;
        const double t = std::clamp((s - start) / edges[e].length, 0.0, 1.0);
        const auto col = static_cast<Eigen::Index>(j);
        cloud.points.col(col) = (1.0 - t) * edges[e].a + t * edges[e].b;
        cloud.normals->col(col) = outward(edges[e]);
    }
    return cloud;
}

Shape2D cross_shape() {
    constexpr double a = 0.35;  // arm half-length
    constexpr double b = 0.1;   // arm half-width
    Points loop(2, 12);
    loop << b, b, a, a, b, b, -b, -b, -a, -a, -b, -b,
           -a, -b, -b, b, b, a, a, b, b, -b, -b, -a;
    return {"cross", {loop}};
}

Shape2D square_shape(double h) {
    Points loop(2, 4);
    loop << -h, h, h, -h,
            -h, -h, h, h;
    return {"square", {loop}};
}

Shape2D circle_shape(double radius, int segments) {
    Points loop(2, segments);
    for (int i = 0; i < segments; ++i) {
        const double t = 2.0 * kPi * i / segments;
        loop.col(i) << radius * std::cos(t), radius * std::sin(t);
    }
    return {"circle", {loop}};
}

DemoShape parse_demo_shape(const std::string& name) {
    if (name == "cross") return DemoShape::Cross;
    if (name == "sparse-box") return DemoShape::SparseBox;
    if (name == "noisy-circle") return DemoShape::NoisyCircle;
    throw InputError("unknown demo shape '" + name + "' (expected cross, sparse-box, noisy-circle)");
}

std::string to_string(DemoShape s) {
    switch (s) {
    case DemoShape::Cross: return "cross";
    case DemoShape::SparseBox: return "sparse-box";
    case DemoShape::NoisyCircle: return "noisy-circle";
    }
    return "unknown";
}

DemoCloud generate_demo_cloud(DemoShape shape, std::uint64_t seed) {
    Rng rng = Rng::stream(seed, 0, StreamPurpose::Generator);
    switch (shape) {
    case DemoShape::Cross: {
        Shape2D s = cross_shape();
        PointCloud c = s.sample_uniform(200, rng);
        return {std::move(c), std::move(s)};
    }
    case DemoShape::SparseBox: {
        Shape2D s = square_shape(0.3);
        PointCloud c = s.sample_even(16);
        return {std::move(c), std::move(s)};
    }
    case DemoShape::NoisyCircle: {
        constexpr double r = 0.3;
        constexpr double sigma = 0.02;
        PointCloud c;
        c.points.resize(2, 500);
        c.normals = Points(2, 500);
        for (Eigen::Index j = 0; j < 500; ++j) {
            const double t = rng.uniform(0.0, 2.0 * kPi);
            const Eigen::Vector2d n(std::cos(t), std::sin(t));
            c.normals->col(j) = n;
            c.points.col(j) = r * n + Eigen::Vector2d(rng.normal(0.0, sigma), rng.normal(0.0, sigma));
        }
        return {std::move(c), circle_shape(r)};
    }
    }
    throw InputError("unknown demo shape");
}

// ---------------------------------------------------------------------------
// Contours

ContourSummary summarize_contour(const Contour2D& contour, const Points& cloud, double threshold) {
    ContourSummary s;
    s.length = contour.total_length;
    if (contour.empty()) return s;
    const NearestNeighborIndex index(cloud);
    const auto comps = contour.components();
    s.components = static_cast<int>(comps.size());
    for (const auto& comp : comps) {
        double best = std::numeric_limits<double>::infinity();
        for (int v : comp) best = std::min(best, index.nearest(contour.vertices.col(v)).distance);
        s.max_component_distance = std::max(s.max_component_distance, best);
        if (best > threshold) ++s.spurious_components;
    }
    return s;
}

double contour_chamfer(const Contour2D& contour, const Points& target, std::size_t n, Rng& rng) {
    const Points samples = sample_contour_uniform(contour, n, rng);
    return chamfer(samples, target);
}

// ---------------------------------------------------------------------------
// λ sweep

LambdaSweepReport lambda_sweep(const PointCloud& cloud, const std::vector<double>& lambdas,
                               const TrainConfig& base, int extract_resolution, std::size_t metric_samples) {
    if (cloud.empty()) throw InputError("lambda sweep: empty cloud");
    LambdaSweepReport report;
    for (double lambda : lambdas) {
        TrainConfig cfg = base;
        cfg.loss.eikonal_weight = lambda;
        const TrainState state = fit(cloud, cfg);
        const auto field = MlpField::create(state.params);

        LambdaSweepRow row;
        row.lambda = lambda;
        row.degenerate_risk = lambda == 0.0;
        Rng rng = Rng::stream(cfg.seed, 0, StreamPurpose::MeshSampling);
        try {
            if (cloud.dim() == 2) {
                const Contour2D contour = marching_squares(*field, cfg.loss.domain, extract_resolution);
                if (contour.empty()) throw EmptyLevelSet("empty contour");
                row.measure = contour.total_length;
                row.chamfer = contour_chamfer(contour, cloud.points, metric_samples, rng);
            } else {
                const TriangleMesh mesh = marching_cubes(*field, cfg.loss.domain, extract_resolution);
                row.measure = mesh.total_area;
                row.chamfer = chamfer(sample_mesh_uniform(mesh, metric_samples, rng), cloud.points);
            }
        } catch (const EmptyLevelSet&) {
            row.measure = 0.0;
            row.chamfer = std::numeric_limits<double>::quiet_NaN();
        }

        // Gradient norms near the cloud, drawn like the local eikonal samples.
        EikonalSampleSpec spec = EikonalSampleSpec::build(cloud.points, cfg.loss.sampling);
        spec.n_global = 0;
        std::vector<Eigen::Index> all(static_cast<std::size_t>(cloud.size()));
        std::iota(all.begin(), all.end(), Eigen::Index{0});
        Rng near_rng = Rng::stream(cfg.seed, 0, StreamPurpose::Experiment);
        const Points near = eikonal_sample_points(cloud.points, all, spec, cfg.loss.domain, near_rng);
        const auto norms = centroid_grad_norms(*field, near);
        row.grad_norm_median = median(norms);
        row.grad_norm_histogram.assign(LambdaSweepReport::kBins, 0.0);
        for (double g : norms) {
            const int bin = std::clamp(static_cast<int>(g / 2.0 * LambdaSweepReport::kBins), 0,
                                       LambdaSweepReport::kBins - 1);
            row.grad_norm_histogram[static_cast<std::size_t>(bin)] += 1.0 / static_cast<double>(norms.size());
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

void LambdaSweepReport::write_csv(const std::filesystem::path& path) const {
    auto out = open_output(path);
    out << "lambda,chamfer,measure,grad_norm_median,degenerate_risk";
    for (int b = 0; b < kBins; ++b) out << ",hist_" << b;
    out << '\n';
    for (const auto& r : rows) {
        out << format_double(r.lambda) << ',' << format_double(r.chamfer) << ',' << format_double(r.measure) << ','
            << format_double(r.grad_norm_median) << ',' << (r.degenerate_risk ? 1 : 0);
        for (double h : r.grad_norm_histogram) out << ',' << format_double(h);
        out << '\n';
    }
}

}  // namespace diffcd
