#include "diffcd/cli/commands.hpp"

#include "diffcd/io.hpp"
#include "diffcd/losses.hpp"
#include "diffcd/mesher.hpp"
#include "diffcd/parallel.hpp"
#include "diffcd/sampler.hpp"
#include "diffcd/trainer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace diffcd::cli {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
    std::string config;
    std::vector<std::string> sets;
    std::uint64_t seed = 0;
    std::string out_dir;
    int threads = 1;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* out_opt = nullptr;
};

void add_common(CLI::App* app, CommonOptions& o) {
    app->add_option("--config", o.config, "INI config file applied on top of the defaults");
    app->add_option("--set", o.sets, "Override, section.key=value (repeatable)")->take_all();
    o.seed_opt = app->add_option("--seed", o.seed, "Seed for all randomness (overrides train.seed)");
    o.out_opt = app->add_option("--out-dir", o.out_dir, "Output directory (overrides io.out_dir)");
    app->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
}

RunConfig resolve_config(RunConfig base, const CommonOptions& o, std::ostream& out) {
    if (!o.config.empty()) apply_ini_file(base, o.config);
    for (const auto& s : o.sets) apply_override(base, s);
    if (o.seed_opt && o.seed_opt->count()) base.train.seed = o.seed;
    if (o.out_opt && o.out_opt->count()) base.io.out_dir = o.out_dir;
    base.resolve();
    parallel::set_num_threads(o.threads);
    out << "# effective config\n" << serialize(base) << "# end effective config\n";
    return base;
}

fs::path ensure_dir(const std::string& dir) {
    fs::path p = dir.empty() ? fs::path(".") : fs::path(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw InputError("cannot create output directory " + p.string() + ": " + ec.message());
    return p;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open for writing: " + path.string());
    out << text;
}

// Normalization transform files: "center = c0,c1[,c2]" and "scale = s".
void write_transform(const fs::path& path, const NormalizationTransform& t) {
    std::ostringstream s;
    s << "center = ";
    for (Eigen::Index i = 0; i < t.center.size(); ++i) s << (i ? "," : "") << format_double(t.center[i]);
    s << "\nscale = " << format_double(t.scale) << '\n';
    write_text(path, s.str());
}

NormalizationTransform read_transform(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open normalization file: " + path.string());
    NormalizationTransform t;
    std::string line;
    bool have_center = false, have_scale = false;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        key.erase(std::remove(key.begin(), key.end(), ' '), key.end());
        const std::string value = line.substr(eq + 1);
        if (key == "center") {
            std::vector<double> c;
            std::stringstream ss(value);
            std::string tok;
            while (std::getline(ss, tok, ',')) c.push_back(std::stod(tok));
            t.center = Eigen::Map<const Vector>(c.data(), static_cast<Eigen::Index>(c.size()));
            have_center = true;
        } else if (key == "scale") {
            t.scale = std::stod(value);
            have_scale = true;
        }
    }
    if (!have_center || !have_scale || !(t.scale > 0.0)) throw InputError("malformed normalization file: " + path.string());
    return t;
}

// ---------------------------------------------------------------------------

int cmd_fit(const CommonOptions& o, const std::string& resume, std::ostream& out) {
    const RunConfig cfg = resolve_config(default_config(), o, out);
    if (cfg.io.input.empty()) throw InputError("fit: no input cloud (set io.input)");
    PointCloud cloud = read_point_cloud(cfg.io.input);
    if (cloud.dim() != cfg.train.field.input_dim) {
        throw InputError("fit: " + cfg.io.input + " is " + std::to_string(cloud.dim()) +
                         "-dimensional but field.input_dim is " + std::to_string(cfg.train.field.input_dim));
    }
    const fs::path dir = ensure_dir(cfg.io.out_dir);
    NormalizationTransform transform{Vector::Zero(cloud.dim()), 1.0};
    if (cfg.io.normalize) std::tie(cloud, transform) = normalize_cloud(cloud);
    write_transform(dir / "normalization.txt", transform);
    write_text(dir / "effective_config.ini", serialize(cfg));

    TrainState state = resume.empty() ? initial_state(cfg.train) : load_train_state(resume);
    std::ofstream log(dir / "train_log.csv", state.iteration == 0 ? std::ios::trunc : std::ios::app);
    FitOptions opts;
    opts.log = &log;
    opts.checkpoint_path = dir / "checkpoint.ckpt";
    train(cloud, cfg.train, state, opts);
    save_train_state(dir / "checkpoint.ckpt", state);
    out << "fit: " << state.iteration << " iterations; checkpoint " << (dir / "checkpoint.ckpt").string() << '\n';
    if (!state.history.empty()) out << "fit: final loss " << format_double(state.history.back().total) << '\n';
    return kExitOk;
}

int cmd_extract(const CommonOptions& o, const std::string& checkpoint, int resolution, std::string out_path,
                std::string normalization, std::ostream& out) {
    RunConfig base = default_config();
    const FieldParams params = load_field(checkpoint);
    base.train.field = params.config();
    const RunConfig cfg = resolve_config(base, o, out);
    if (resolution <= 0) resolution = cfg.io.extract_resolution;
    if (resolution < 2) throw InputError("extract: resolution must be >= 2");
    const auto field = MlpField::create(params);

    if (normalization.empty()) {
        const fs::path guess = fs::path(checkpoint).parent_path() / "normalization.txt";
        if (fs::exists(guess)) normalization = guess.string();
    }
    NormalizationTransform t{Vector::Zero(field->dim()), 1.0};
    if (!normalization.empty()) t = read_transform(normalization);
    if (t.center.size() != field->dim()) throw InputError("extract: normalization dimension mismatch");

    const fs::path dir = ensure_dir(cfg.io.out_dir);
    if (field->dim() == 3) {
        if (out_path.empty()) out_path = (dir / "mesh.obj").string();
        const TriangleMesh mesh = t.invert(marching_cubes(*field, cfg.train.loss.domain, resolution));
        write_obj(out_path, mesh);
        out << "extract: " << mesh.vertices.cols() << " vertices, " << mesh.faces.size() << " faces, area "
            << format_double(mesh.total_area) << " -> " << out_path << '\n';
    } else {
        if (out_path.empty()) out_path = (dir / "contour.csv").string();
        const Contour2D raw = marching_squares(*field, cfg.train.loss.domain, resolution);
        if (raw.empty()) throw EmptyLevelSet("extract: the field has no zero crossing in the domain");
        const Contour2D contour = t.invert(raw);
        write_contour_csv(out_path, contour);
        fs::path svg = out_path;
        svg.replace_extension(".svg");
        const BoundingBox box{t.invert(Points(cfg.train.loss.domain.lower)).col(0),
                              t.invert(Points(cfg.train.loss.domain.upper)).col(0)};
        write_contour_svg(svg, contour, box);
        out << "extract: " << contour.segments.size() << " segments, length " << format_double(contour.total_length)
            << " -> " << out_path << '\n';
    }
    return kExitOk;
}

PointCloud load_for_metrics(const std::string& path, std::size_t n, Rng& rng) {
    fs::path p(path);
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".obj") {
        if (!fs::exists(p)) throw InputError("input file does not exist: " + path);
        const TriangleMesh mesh = read_obj(p);
        PointCloud c;
        Points normals;
        c.points = sample_mesh_uniform(mesh, n, rng, &normals);
        c.normals = std::move(normals);
        return c;
    }
    return read_point_cloud(p);
}

int cmd_metrics(const CommonOptions& o, const std::string& a, const std::string& b, std::size_t samples,
                std::string out_path, const std::string& shape, const std::string& variant, std::ostream& out) {
    const RunConfig cfg = resolve_config(default_config(), o, out);
    if (samples == 0) samples = cfg.io.metric_samples;
    // Both sides replay one stream, so identical meshes yield identical samples.
    Rng rng_a = Rng::stream(cfg.train.seed, 0, StreamPurpose::MeshSampling);
    Rng rng_b = Rng::stream(cfg.train.seed, 0, StreamPurpose::MeshSampling);
    const PointCloud A = load_for_metrics(a, samples, rng_a);
    const PointCloud B = load_for_metrics(b, samples, rng_b);
    MetricsRow row{shape, variant, shape_metrics(A, B), samples, cfg.train.seed};
    if (out_path.empty()) out_path = (ensure_dir(cfg.io.out_dir) / "metrics.csv").string();
    append_metrics_csv(out_path, row);
    out << metrics_csv_header() << '\n' << metrics_csv_line(row) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

struct Check {
    std::string name;
    bool pass;
    std::string detail;
};

int report_checks(const std::vector<Check>& checks, std::ostream& out) {
    bool all = true;
    for (const auto& c : checks) {
        out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
        all = all && c.pass;
    }
    return all ? kExitOk : kExitCheckFailed;
}

std::string rel_detail(double got, double want) {
    std::ostringstream s;
    s << "got " << got << ", expected " << want << " (rel. err " << std::abs(got - want) / std::abs(want) << ")";
    return s.str();
}

int cmd_verify_ssa(const CommonOptions& o, const std::string& field_name, std::vector<double> alphas, std::size_t K,
                   int repeats, std::ostream& out) {
    const RunConfig cfg = resolve_config(default_config(), o, out);
    const int dim = cfg.train.field.input_dim;
    std::unique_ptr<ScalarField> owned;
    bool exact_sdf = false;
    double scale = 1.0;
    if (field_name == "sphere") {
        owned = std::make_unique<AnalyticSdf>(AnalyticSdf::sphere(dim, 0.35));
        exact_sdf = true;
    } else if (field_name == "scaled-sphere") {
        scale = 0.5;
        owned = std::make_unique<AnalyticSdf>(AnalyticSdf::sphere(dim, 0.35).scaled(scale));
    } else if (field_name == "mlp") {
        owned = MlpField::create(init_geometric(cfg.train.field, cfg.train.seed));
    } else {
        throw InputError("verify ssa: unknown field '" + field_name + "' (expected sphere, scaled-sphere, mlp)");
    }
    SsaExperiment exp;
    exp.field = owned.get();
    exp.domain = cfg.train.loss.domain;
    exp.alphas = std::move(alphas);
    exp.K = K;
    exp.repeats = repeats;
    const SsaReport report = run_ssa_experiment(exp, cfg.train.seed);
    const fs::path dir = ensure_dir(cfg.io.out_dir);
    report.write_csv(dir / "ssa_experiment.csv");
    report.write_svg(dir / "ssa_experiment.svg");

    std::vector<Check> checks;
    const SsaRow* at100 = nullptr;
    const SsaRow* at1000 = nullptr;
    for (const auto& r : report.rows) {
        out << "alpha " << r.alpha << ": mean " << r.mean << " stdev " << r.stdev << " oracle " << r.mesh_oracle
            << " area " << r.area << '\n';
        if (r.alpha == 100.0) at100 = &r;
        if (r.alpha == 1000.0) at1000 = &r;
    }
    if (at100) {
        if (field_name == "mlp") {
            const bool expect_above = report.median_grad_norm < 1.0;
            const bool above = at100->mean > at100->area;
            checks.push_back({"estimate follows 1/|g|, not area", expect_above == above,
                              "median |g| " + std::to_string(report.median_grad_norm) + ", estimate " +
                                  std::to_string(at100->mean) + ", area " + std::to_string(at100->area)});
        } else {
            const double want = exact_sdf ? at100->area : at100->area / scale;
            checks.push_back({"alpha=100 estimate vs area", std::abs(at100->mean - want) <= 0.03 * want,
                              rel_detail(at100->mean, want)});
            checks.push_back({"mesh oracle vs estimate", std::abs(at100->mesh_oracle - at100->mean) <= 0.03 * at100->mean,
                              rel_detail(at100->mesh_oracle, at100->mean)});
        }
    }
    if (at100 && at1000) {
        checks.push_back({"variance grows with alpha", at1000->stdev > at100->stdev,
                          "stdev(1000) " + std::to_string(at1000->stdev) + " vs stdev(100) " + std::to_string(at100->stdev)});
    }
    if (checks.empty()) throw InputError("verify ssa: the alpha grid must contain 100");
    return report_checks(checks, out);
}

int cmd_verify_toy(const CommonOptions& o, std::ostream& out) {
    const RunConfig cfg = resolve_config(default_config(), o, out);
    constexpr double alpha = 1e4;
    std::vector<Check> checks;
    Rng rng = Rng::stream(cfg.train.seed, 0, StreamPurpose::Experiment);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double r = rng.uniform(0.2, 1.0);
        const double mu = rng.uniform(0.0, 1.2 * r / std::numbers::pi);
        const ToyCircleSpec spec{r, mu, 2};
        worst = std::max(worst, std::abs(toy_circle_descent(spec, r, alpha) - toy_circle_minimizer(spec)));
    }
    checks.push_back({"p=2 descent matches max(0, r - pi mu)", worst < 1e-3, "max error " + std::to_string(worst)});
    const double below = toy_circle_descent({0.5, 0.1, 1}, 0.25, alpha);
    checks.push_back({"p=1, mu=0.1 recovers r", std::abs(below - 0.5) < 1e-3, "theta " + std::to_string(below)});
    const double above = toy_circle_descent({0.5, 0.2, 1}, 0.25, alpha);
    checks.push_back({"p=1, mu=0.2 collapses", above < 1e-2, "theta " + std::to_string(above)});

    const fs::path dir = ensure_dir(cfg.io.out_dir);
    std::ofstream csv(dir / "toy_circle.csv");
    csv << "p,r,mu,closed_form,descent\n";
    for (int p : {1, 2}) {
        for (int k = 0; k <= 30; ++k) {
            const ToyCircleSpec spec{0.5, 0.01 * k, p};
            csv << p << ",0.5," << format_double(spec.mu) << ',' << format_double(toy_circle_minimizer(spec)) << ','
                << format_double(toy_circle_descent(spec, 0.25, alpha)) << '\n';
        }
    }
    return report_checks(checks, out);
}

int cmd_verify_lambda(const CommonOptions& o, std::vector<double> lambdas, std::ostream& out) {
    const RunConfig cfg = resolve_config(desk_config_2d(), o, out);
    if (cfg.train.field.input_dim != 2) throw InputError("verify lambda-sweep runs on the 2D noisy circle");
    const DemoCloud demo = generate_demo_cloud(DemoShape::NoisyCircle, cfg.train.seed);
    const LambdaSweepReport report =
        lambda_sweep(demo.cloud, lambdas, cfg.train, cfg.io.extract_resolution, cfg.io.metric_samples);
    report.write_csv(ensure_dir(cfg.io.out_dir) / "lambda_sweep.csv");
    std::vector<Check> checks;
    bool monotone = true;
    std::ostringstream detail;
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& r = report.rows[i];
        detail << "lambda " << r.lambda << ": length " << r.measure << ", median |g| " << r.grad_norm_median
               << (r.degenerate_risk ? " (degenerate risk)" : "") << "; ";
        if (i > 0 && r.measure > report.rows[i - 1].measure) monotone = false;
    }
    checks.push_back({"contour length non-increasing in lambda", monotone, detail.str()});
    return report_checks(checks, out);
}

// ---------------------------------------------------------------------------

int cmd_demo2d(const CommonOptions& o, const std::string& shape_name, const std::string& variant, std::ostream& out) {
    const DemoShape shape = parse_demo_shape(shape_name);
    RunConfig base = desk_config_2d();
    if (!variant.empty()) base.train.loss.variant = parse_loss_variant(variant);
    const RunConfig cfg = resolve_config(base, o, out);
    if (cfg.train.field.input_dim != 2) throw InputError("demo2d needs field.input_dim = 2");
    const fs::path dir = ensure_dir(cfg.io.out_dir);
    const DemoResult r = run_demo2d(shape, cfg, dir);
    out << "demo2d " << shape_name << " " << to_string(cfg.train.loss.variant) << ": cd_cloud " << r.cd_cloud
        << ", cd_reference " << r.cd_reference << ", length " << r.summary.length << ", components "
        << r.summary.components << ", spurious " << r.summary.spurious_components << '\n';
    if (r.contour.empty()) throw EmptyLevelSet("demo2d: the fitted field has no zero crossing");
    return kExitOk;
}

}  // namespace

DemoResult run_demo2d(DemoShape shape, const RunConfig& cfg, const fs::path& out_dir) {
    DemoResult result;
    const DemoCloud demo = generate_demo_cloud(shape, cfg.train.seed);
    result.cloud = demo.cloud;

    std::ofstream log;
    FitOptions opts;
    if (!out_dir.empty()) {
        write_xyz(out_dir / "cloud.xyz", demo.cloud);
        write_text(out_dir / "effective_config.ini", serialize(cfg));
        log.open(out_dir / "train_log.csv");
        opts.log = &log;
    }
    const TrainState state = fit(demo.cloud, cfg.train, opts);
    const auto field = MlpField::create(state.params);
    result.contour = marching_squares(*field, cfg.train.loss.domain, cfg.io.extract_resolution);
    result.summary = summarize_contour(result.contour, demo.cloud.points);

    constexpr double inf = std::numeric_limits<double>::infinity();
    if (result.contour.empty()) {
        result.cd_cloud = result.cd_reference = inf;
        result.metrics.raw_cd = result.metrics.raw_cd2 = inf;
        result.metrics.ca_degrees = std::numeric_limits<double>::quiet_NaN();
    } else {
        Rng rng = Rng::stream(cfg.train.seed, 0, StreamPurpose::MeshSampling);
        PointCloud samples;
        Points normals;
        samples.points = sample_contour_uniform(result.contour, cfg.io.metric_samples, rng, &normals, field.get());
        samples.normals = std::move(normals);
        const PointCloud reference = demo.reference.sample_even(4 * cfg.io.metric_samples);
        result.cd_cloud = chamfer(samples.points, demo.cloud.points);
        result.metrics = shape_metrics(samples, reference);
        result.cd_reference = result.metrics.raw_cd;
    }
    if (!out_dir.empty()) {
        write_contour_svg(out_dir / "contour.svg", result.contour, cfg.train.loss.domain, &demo.cloud.points);
        write_contour_csv(out_dir / "contour.csv", result.contour);
        const fs::path metrics = out_dir / "metrics.csv";
        if (fs::exists(metrics)) fs::remove(metrics);
        append_metrics_csv(metrics, {to_string(shape), to_string(cfg.train.loss.variant), result.metrics,
                                     cfg.io.metric_samples, cfg.train.seed});
    }
    return result;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const EmptyLevelSet*>(&e)) return kExitEmptyLevelSet;
    if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
    if (dynamic_cast<const InputError*>(&e)) return kExitUsage;
    if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return kExitUsage;
    if (dynamic_cast<const std::logic_error*>(&e)) return kExitUsage;
    return kExitNumerical;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"diffcd: neural implicit surface fitting with the symmetric Chamfer loss"};
    app.require_subcommand(1);

    CommonOptions fit_o, ext_o, met_o, ssa_o, toy_o, lam_o, demo_o;

    auto* fit = app.add_subcommand("fit", "Fit a field to a point cloud");
    add_common(fit, fit_o);
    std::string resume;
    fit->add_option("--resume", resume, "Continue from a training checkpoint");

    auto* ext = app.add_subcommand("extract", "Extract the zero-level set of a checkpoint");
    add_common(ext, ext_o);
    std::string ckpt, ext_out, ext_norm;
    int resolution = 0;
    ext->add_option("checkpoint", ckpt, "Checkpoint file")->required();
    ext->add_option("--resolution", resolution, "Lattice resolution (default io.extract_resolution)");
    ext->add_option("--out", ext_out, "Output OBJ (3D) or contour CSV (2D)");
    ext->add_option("--normalization", ext_norm, "Normalization transform to invert");

    auto* met = app.add_subcommand("metrics", "Chamfer metrics between two meshes or clouds");
    add_common(met, met_o);
    std::string met_a, met_b, met_out, met_shape = "shape", met_variant = "unknown";
    std::size_t met_samples = 0;
    met->add_option("a", met_a, "Mesh (.obj) or cloud")->required();
    met->add_option("b", met_b, "Mesh (.obj) or cloud")->required();
    met->add_option("--samples", met_samples, "Samples per mesh (default io.metric_samples)");
    met->add_option("--out", met_out, "Metrics CSV to append to");
    met->add_option("--shape", met_shape, "Shape label");
    met->add_option("--variant", met_variant, "Variant label");

    auto* ver = app.add_subcommand("verify", "Numerical checks of the theory");
    ver->require_subcommand(1);
    auto* ssa = ver->add_subcommand("ssa", "SSA convergence experiment");
    add_common(ssa, ssa_o);
    std::string ssa_field = "sphere";
    std::vector<double> alphas{10.0, 100.0, 1000.0};
    std::size_t ssa_k = 5000;
    int repeats = 100;
    ssa->add_option("--field", ssa_field, "sphere | scaled-sphere | mlp");
    ssa->add_option("--alpha", alphas, "Alpha grid");
    ssa->add_option("--samples", ssa_k, "K per estimate");
    ssa->add_option("--repeats", repeats, "Repeats per alpha");
    auto* toy = ver->add_subcommand("toy-circle", "Toy circle closed form vs descent");
    add_common(toy, toy_o);
    auto* lam = ver->add_subcommand("lambda-sweep", "Eikonal weight sweep on the noisy circle");
    add_common(lam, lam_o);
    std::vector<double> lambdas{0.1, 0.5, 1.0};
    lam->add_option("--lambdas", lambdas, "Lambda grid");

    auto* demo = app.add_subcommand("demo2d", "Fit a synthetic 2D cloud");
    add_common(demo, demo_o);
    std::string demo_shape, demo_variant;
    demo->add_option("shape", demo_shape, "cross | sparse-box | noisy-circle")->required();
    demo->add_option("--variant", demo_variant, "igr | siren | neural-pull | diffcd");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*fit) return cmd_fit(fit_o, resume, out);
        if (*ext) return cmd_extract(ext_o, ckpt, resolution, ext_out, ext_norm, out);
        if (*met) return cmd_metrics(met_o, met_a, met_b, met_samples, met_out, met_shape, met_variant, out);
        if (*ssa) return cmd_verify_ssa(ssa_o, ssa_field, alphas, ssa_k, repeats, out);
        if (*toy) return cmd_verify_toy(toy_o, out);
        if (*lam) return cmd_verify_lambda(lam_o, lambdas, out);
        if (*demo) return cmd_demo2d(demo_o, demo_shape, demo_variant, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return kExitUsage;
}

}  // namespace diffcd::cli
