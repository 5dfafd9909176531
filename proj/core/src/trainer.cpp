#include "diffcd/trainer.hpp"

#include "diffcd/nearest_neighbor.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace diffcd {

void TrainConfig::validate() const {
    if (iterations < 0) throw InputError("train.iterations must be >= 0");
    if (!(base_lr > 0.0)) throw InputError("train.lr must be > 0");
    if (warmup_iters < 0 || warmup_iters > iterations) {
        throw InputError("train.warmup must lie in [0, iterations]");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw InputError("adam betas must lie in [0, 1)");
    }
    if (!(adam_eps > 0.0)) throw InputError("train.adam_eps must be > 0");
    if (log_every < 1) throw InputError("train.log_every must be >= 1");
    if (checkpoint_every < 0) throw InputError("train.checkpoint_every must be >= 0");
    field.validate();
    loss.validate();
    if (loss.domain.dim() != field.input_dim) throw InputError("loss domain and field dimension differ");
}

double lr_at(long iter, const TrainConfig& cfg) {
    if (iter < cfg.warmup_iters) {
        return cfg.base_lr * static_cast<double>(iter + 1) / static_cast<double>(cfg.warmup_iters);
    }
    const long span = cfg.iterations - cfg.warmup_iters;
    if (span <= 0) return cfg.base_lr;
    const double t = static_cast<double>(iter - cfg.warmup_iters) / static_cast<double>(span);
    return cfg.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

void adam_step(Vector& params, AdamState& adam, const Vector& gradient, double lr, const TrainConfig& cfg) {
    if (gradient.size() != params.size()) throw InputError("adam_step: gradient length mismatch");
    if (!gradient.allFinite()) throw NumericalError("adam_step: non-finite gradient");
    if (adam.m.size() != params.size()) {
        adam.m = Vector::Zero(params.size());
        adam.v = Vector::Zero(params.size());
    }
    ++adam.step;
    adam.m = cfg.beta1 * adam.m + (1.0 - cfg.beta1) * gradient;
    adam.v = cfg.beta2 * adam.v + (1.0 - cfg.beta2) * gradient.cwiseAbs2();
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam.step));
    params.array() -= lr * (adam.m.array() / c1) / ((adam.v.array() / c2).sqrt() + cfg.adam_eps);
}

TrainState initial_state(const TrainConfig& cfg) {
    cfg.validate();
    TrainState state{init_geometric(cfg.field, cfg.seed), {}, 0, std::nullopt, cfg.seed, {}, 0};
    state.adam.m = Vector::Zero(static_cast<Eigen::Index>(state.params.size()));
    state.adam.v = state.adam.m;
    return state;
}

std::string training_log_header() {
    return "iteration,lr,total,data,eikonal,ssa,surface_to_points,accept_ratio";
}

std::string training_log_line(const IterationRecord& r) {
    auto get = [&](const char* k) {
        const auto it = r.components.find(k);
        return it == r.components.end() ? std::string("0") : format_double(it->second);
    };
    std::ostringstream out;
    out << r.iteration << ',' << format_double(r.lr) << ',' << format_double(r.total) << ',' << get("data")
        << ',' << get("eikonal") << ',' << get("ssa") << ',' << get("surface_to_points") << ','
        << format_double(r.accept_ratio);
    return out.str();
}

namespace {

SurfaceSampleBank refresh_with_retry(const ScalarField& field, const TrainConfig& cfg, std::uint64_t seed,
                                     long iteration) {
    const auto& s = cfg.loss.sampling;
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(iteration), StreamPurpose::BankRefresh);
    try {
        return refresh_bank(field, cfg.loss.domain, s, rng, iteration);
    } catch (const EmptyLevelSet&) {
        Rng retry = Rng::stream(seed, static_cast<std::uint64_t>(iteration), StreamPurpose::BankRefresh);
        try {
            return refresh_bank(field, cfg.loss.domain, s, retry, iteration, 2 * s.train_mc_resolution);
        } catch (const EmptyLevelSet&) {
            throw EmptyLevelSet("bank refresh at iteration " + std::to_string(iteration) +
                                ": the zero-level set vanished at resolutions " +
                                std::to_string(s.train_mc_resolution) + " and " +
                                std::to_string(2 * s.train_mc_resolution));
        }
    }
}

std::vector<Eigen::Index> draw_batch(Eigen::Index n, std::size_t batch, Rng& rng) {
    std::vector<Eigen::Index> out(batch);
    if (static_cast<Eigen::Index>(batch) > n) {
        for (auto& i : out) i = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
        return out;
    }
    // Partial Fisher-Yates: the first `batch` entries form a uniform subset.
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    for (std::size_t i = 0; i < batch; ++i) {
        const std::size_t j = i + rng.index(perm.size() - i);
        std::swap(perm[i], perm[j]);
    }
    std::copy_n(perm.begin(), batch, out.begin());
    return out;
}

Points gather(const Points& cloud, const std::vector<Eigen::Index>& idx) {
    Points out(cloud.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = cloud.col(idx[j]);
    return out;
}

}  // namespace

void train(const PointCloud& cloud, const TrainConfig& cfg, TrainState& state, const FitOptions& options) {
    cfg.validate();
    if (cloud.empty()) throw InputError("cannot fit an empty point cloud");
    require_dim(cloud.points, cfg.field.input_dim, "fit");
    if (!(state.params.config() == cfg.field)) throw InputError("training state does not match the field config");

    const auto& s = cfg.loss.sampling;
    const LossVariant variant = cfg.loss.variant;
    auto field = MlpField::create(state.params);
    EikonalSampleSpec spec = EikonalSampleSpec::build(cloud.points, s);
    EikonalSampleSpec local_spec = spec;
    local_spec.n_global = 0;
    std::optional<NearestNeighborIndex> index;
    if (variant == LossVariant::DiffCD || variant == LossVariant::NeuralPull) index.emplace(cloud.points);

    if (options.log && state.iteration == 0) *options.log << training_log_header() << '\n';

    for (long k = state.iteration; k < cfg.iterations; ++k) {
        if (options.stop_after >= 0 && k >= options.stop_after) break;
        const auto key = static_cast<std::uint64_t>(k);

        if (variant == LossVariant::DiffCD && (k % s.K_mesh == 0 || !state.bank)) {
            state.bank = refresh_with_retry(*field, cfg, state.seed, k);
        }

        Rng batch_rng = Rng::stream(state.seed, key, StreamPurpose::CloudBatch);
        const auto batch_idx = draw_batch(cloud.size(), s.batch_cloud, batch_rng);
        const Points batch = gather(cloud.points, batch_idx);

        LossInputs in;
        in.cloud_batch = &batch;
        in.cloud_index = index ? &*index : nullptr;
        Points eik, local, ssa, surface;
        Rng eik_rng = Rng::stream(state.seed, key, StreamPurpose::Eikonal);
        if (variant == LossVariant::NeuralPull) {
            local = eikonal_sample_points(cloud.points, batch_idx, local_spec, cfg.loss.domain, eik_rng);
            in.local_samples = &local;
        } else {
            eik = eikonal_sample_points(cloud.points, batch_idx, spec, cfg.loss.domain, eik_rng);
            in.eikonal_samples = &eik;
        }
        if (variant == LossVariant::SIREN) {
            Rng ssa_rng = Rng::stream(state.seed, key, StreamPurpose::Ssa);
            ssa = uniform_in_box(cfg.loss.domain, s.ssa_samples, ssa_rng);
            in.ssa_samples = &ssa;
        }
        double accept_ratio = 1.0;
        if (variant == LossVariant::DiffCD) {
            Rng draw_rng = Rng::stream(state.seed, key, StreamPurpose::SurfaceDraw);
            SurfaceDraw draw = draw_surface_samples(*state.bank, *field, s.batch_surface, s, draw_rng);
            if ((draw.stale || draw.points.cols() == 0) && state.bank->refreshed_at_iteration != k) {
                state.bank = refresh_with_retry(*field, cfg, state.seed, k);
                Rng redraw_rng = Rng::stream(state.seed, key, StreamPurpose::SurfaceDraw);
                draw = draw_surface_samples(*state.bank, *field, s.batch_surface, s, redraw_rng);
            }
            if (draw.points.cols() == 0) {
                throw NumericalError("iteration " + std::to_string(k) +
                                     ": no surface sample converged under SDF-descent");
            }
            accept_ratio = draw.accept_ratio;
            surface = std::move(draw.points);
            in.surface_samples = &surface;
        }

        LossValue loss;
        try {
            loss = composite_loss(*field, in, cfg.loss, true);
        } catch (const NumericalError& e) {
            throw NumericalError("iteration " + std::to_string(k) + ": " + e.what());
        }
        state.eikonal_skipped += loss.eikonal_skipped;

        const double lr = lr_at(k, cfg);
        adam_step(state.params.flat(), state.adam, loss.gradient, lr, cfg);
        state.params.round_to_precision();
        field->set_params(state.params);
        state.iteration = k + 1;

        IterationRecord rec{k, lr, loss.total, std::move(loss.components), accept_ratio};
        if (options.log && (k % cfg.log_every == 0 || k + 1 == cfg.iterations)) {
            *options.log << training_log_line(rec) << '\n';
        }
        if (options.on_iteration) options.on_iteration(rec);
        state.history.push_back(std::move(rec));
        if (state.history.size() > TrainState::kHistory) state.history.pop_front();

        if (cfg.checkpoint_every > 0 && !options.checkpoint_path.empty() &&
            state.iteration % cfg.checkpoint_every == 0) {
            save_train_state(options.checkpoint_path, state);
        }
    }
}

TrainState fit(const PointCloud& cloud, const TrainConfig& cfg, const FitOptions& options) {
    TrainState state = initial_state(cfg);
    train(cloud, cfg, state, options);
    return state;
}

void save_train_state(const std::filesystem::path& path, const TrainState& state) {
    HeaderEntries extra = {
        {"seed", std::to_string(state.seed)},
        {"iteration", std::to_string(state.iteration)},
        {"adam_step", std::to_string(state.adam.step)},
        {"eikonal_skipped", std::to_string(state.eikonal_skipped)},
    };
    if (state.bank) {
        extra.emplace_back("bank_points", std::to_string(state.bank->points.cols()));
        extra.emplace_back("bank_refreshed_at", std::to_string(state.bank->refreshed_at_iteration));
        extra.emplace_back("bank_triangles", std::to_string(state.bank->triangle_count));
        extra.emplace_back("bank_area", format_double(state.bank->total_area));
    }
    write_file_atomically(path, [&](std::ostream& out) {
        write_checkpoint(out, state.params, extra);
        write_binary(out, state.adam.m, Precision::F64);
        write_binary(out, state.adam.v, Precision::F64);
        if (state.bank) {
            const Vector flat = state.bank->points.reshaped();
            write_binary(out, flat, Precision::F64);
        }
    });
}

TrainState load_train_state(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open checkpoint: " + path.string());
    std::map<std::string, std::string> header;
    FieldParams params = read_checkpoint(in, &header);
    auto get = [&](const char* key) -> const std::string& {
        const auto it = header.find(key);
        if (it == header.end()) throw InputError(path.string() + ": not a training checkpoint (missing " + key + ")");
        return it->second;
    };
    TrainState state{std::move(params), {}, 0, std::nullopt, 0, {}, 0};
    try {
        state.seed = std::stoull(get("seed"));
        state.iteration = std::stol(get("iteration"));
        state.adam.step = std::stol(get("adam_step"));
        state.eikonal_skipped = std::stoull(get("eikonal_skipped"));
    } catch (const std::logic_error&) {
        throw InputError(path.string() + ": malformed training header");
    }
    const auto n = state.params.size();
    state.adam.m = read_binary(in, n, Precision::F64);
    state.adam.v = read_binary(in, n, Precision::F64);
    if (header.count("bank_points")) {
        SurfaceSampleBank bank;
        const auto count = std::stoul(header.at("bank_points"));
        const int dim = state.params.config().input_dim;
        const Vector flat = read_binary(in, count * static_cast<std::size_t>(dim), Precision::F64);
        bank.points = flat.reshaped(dim, static_cast<Eigen::Index>(count));
        bank.refreshed_at_iteration = std::stol(header.at("bank_refreshed_at"));
        bank.triangle_count = std::stoul(header.at("bank_triangles"));
        bank.total_area = std::stod(header.at("bank_area"));
        state.bank = std::move(bank);
    }
    return state;
}

}  // namespace diffcd
