#pragma once

#include "diffcd/field.hpp"
#include "diffcd/losses.hpp"
#include "diffcd/sampler.hpp"
#include "diffcd/types.hpp"

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>

namespace diffcd {

struct TrainConfig {
    long iterations = 40000;
    double base_lr = 1e-3;
    long warmup_iters = 1000;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    long log_every = 100;
    long checkpoint_every = 0;  // 0 disables periodic checkpoints
    FieldConfig field;
    LossConfig loss;

    void validate() const;
};

/// Warmup from base_lr / warmup up to base_lr, then cosine annealing to 0.
double lr_at(long iter, const TrainConfig& cfg);

struct AdamState {
    Vector m;
    Vector v;
    long step = 0;
};

/// One bias-corrected Adam update of `params` in place. Throws NumericalError on a
/// non-finite gradient.
void adam_step(Vector& params, AdamState& adam, const Vector& gradient, double lr, const TrainConfig& cfg);

struct IterationRecord {
    long iteration = 0;
    double lr = 0.0;
    double total = 0.0;
    std::map<std::string, double> components;
    double accept_ratio = 1.0;
};

struct TrainState {
    FieldParams params;
    AdamState adam;
    long iteration = 0;  // next iteration to run
    std::optional<SurfaceSampleBank> bank;
    std::uint64_t seed = 0;
    std::deque<IterationRecord> history;  // most recent records, bounded
    std::size_t eikonal_skipped = 0;

    static constexpr std::size_t kHistory = 1000;
};

TrainState initial_state(const TrainConfig& cfg);

struct FitOptions {
    std::ostream* log = nullptr;                // CSV training log
    std::filesystem::path checkpoint_path;      // used when checkpoint_every > 0
    long stop_after = -1;                       // stop before this iteration (for interruption)
    std::function<void(const IterationRecord&)> on_iteration;
};

std::string training_log_header();
std::string training_log_line(const IterationRecord& r);

/// Runs iterations state.iteration .. cfg.iterations - 1 on a normalized cloud.
/// The trajectory depends only on (cfg, cloud, state), never on the thread count.
void train(const PointCloud& cloud, const TrainConfig& cfg, TrainState& state, const FitOptions& options = {});

/// initial_state followed by train.
TrainState fit(const PointCloud& cloud, const TrainConfig& cfg, const FitOptions& options = {});

/// Field parameters, Adam moments, bank, and iteration counters. Resuming from a
/// checkpoint reproduces the uninterrupted run bit for bit.
void save_train_state(const std::filesystem::path& path, const TrainState& state);
TrainState load_train_state(const std::filesystem::path& path);

}  // namespace diffcd
