#pragma once

#include "diffcd/trainer.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace diffcd::cli {

struct IoConfig {
    std::string input;
    std::string out_dir = "out";
    bool normalize = true;
    int extract_resolution = 512;
    std::size_t metric_samples = 30000;

    friend bool operator==(const IoConfig&, const IoConfig&) = default;
};

/// Everything a command needs. Serialized as INI sections [field] [sampling]
/// [loss] [train] [io]; see keys() for the accepted names.
struct RunConfig {
    TrainConfig train;
    IoConfig io;
    bool domain_auto = true;  // Ω = [-0.5, 0.5]^d for the configured dimension

    /// Fills derived values (Ω when automatic) and validates.
    void resolve();
};

/// Full-scale defaults.
RunConfig default_config();
/// Single-core 3D preset: 4 x 64 network, smaller batches, 5000 iterations.
RunConfig desk_config_3d();
/// Single-core 2D preset used by demo2d and the λ sweep.
RunConfig desk_config_2d();

/// Names of every accepted key as "section.key", in serialization order.
std::vector<std::string> config_keys();

std::string serialize(const RunConfig& cfg);
/// Applies an INI document on top of `base`. Unknown sections or keys are errors.
void apply_ini(RunConfig& base, std::istream& in, const std::string& source = "<config>");
void apply_ini_file(RunConfig& base, const std::filesystem::path& path);
/// Applies one "section.key=value" override.
void apply_override(RunConfig& cfg, const std::string& assignment);

bool same_config(const RunConfig& a, const RunConfig& b);

}  // namespace diffcd::cli
