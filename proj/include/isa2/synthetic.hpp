#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "isa2/dataset.hpp"

namespace isa2 {

struct MomentTarget {
    double mean = 0.0;  // km/h
    double std = 1.0;   // km/h
};

/// Targets indexed [scenario][split]; defaults are the recorded route statistics
/// (urban 19.55/13.60 train, 19.59/14.78 test; highway 84.31/18.15, 95.08/12.81).
using MomentTable = std::array<std::array<MomentTarget, 2>, 2>;

MomentTable default_moment_targets();


struct SyntheticConfig {
    int frames_per_scenario_split = 2000;
    int map_height = 48;
    int map_width = 80;
    MomentTable targets = default_moment_targets();
    double noise_std = 3.0;
    std::uint64_t rng_seed = 0;
    int class_count = kDefaultClassCount;
    /// Also write per-scale score maps (scales 0.5, 0.75, 1) under scores/.
    bool emit_score_maps = false;
};

/// speed = max(0, bias + weights . spp_descriptor(map, L=3) + noise)
struct PlantedWeights {
    Scenario scenario = Scenario::Urban;
    double bias = 0.0;
    std::vector<double> weights;

    double response(std::span<const double> descriptor) const;
};

struct SplitStatistics {
    std::size_t count = 0;
    double mean = 0.0;
    double std = 0.0;  // population
};

struct SyntheticDataset {
    Manifest manifest;
    std::array<PlantedWeights, 2> planted;           // [scenario]
    std::array<std::array<SplitStatistics, 2>, 2> achieved;  // [scenario][split]
};

/// Validates `config`; throws ConfigError describing the first problem.
void validate(const SyntheticConfig& config);

/// Planted weights and bias for each scenario under `config` (no RNG involved).
std::array<PlantedWeights, 2> planted_weights(const SyntheticConfig& config);

/// Writes manifest.csv, labels/<frame>.pgm, planted_weights.csv and optionally
/// scores/<frame>_<k>.smap into `out_dir`. Bit-identical for identical configs.
SyntheticDataset generate_synthetic(const SyntheticConfig& config, const std::filesystem::path& out_dir);

void write_planted_weights(const std::filesystem::path& path, const std::array<PlantedWeights, 2>& planted);
std::array<PlantedWeights, 2> load_planted_weights(const std::filesystem::path& path);

SplitStatistics describe(std::span<const double> speeds);

}  // namespace isa2
