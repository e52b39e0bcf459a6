#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "isa2/evaluation.hpp"
#include "isa2/features.hpp"
#include "isa2/regressors.hpp"
#include "isa2/synthetic.hpp"

namespace isa2 {

struct PipelinePaths {
    std::filesystem::path out_dir = "data";  // generator output
    std::filesystem::path manifest = "data/manifest.csv";
    std::filesystem::path score_dir = "data/scores";
    std::filesystem::path fused_dir = "data/fused";
    std::filesystem::path feature_cache = "work/features.csv";
    std::filesystem::path model_dir = "work/models";
    std::filesystem::path report_dir = "work/reports";
};

/// Cross-validation over one hyperparameter (a [train] key) and pyramid depth.
struct CvSpec {
    int folds = 0;
    std::string parameter;  // empty: grid holds only the base config
    std::vector<std::string> values;
    std::vector<int> levels = {1, 2, 3};
};

struct PipelineConfig {
    PipelinePaths paths;
    SyntheticConfig generate;
    PyramidConfig pyramid;
    int class_count = kDefaultClassCount;
    TrainConfig train;
    Regime regime = Regime::Independent;
    CvSpec cv;
    std::uint64_t seed = 0;
    int jobs = 1;

    /// Copies `seed` into the generator and trainer.
    void set_seed(std::uint64_t value);
};

/// Sets one [train] key (e.g. "ridge_lambda", "mlp_hidden"). Throws ConfigError
/// on an unknown key or malformed value.
void apply_train_key(TrainConfig& config, std::string_view key, std::string_view value);

/// Parses INI text. Relative paths are resolved against `base_dir`. Unknown
/// sections or keys are rejected so typos do not pass silently.
PipelineConfig parse_pipeline_config(const std::string& text, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// INI rendering that parses back to an equal configuration.
std::string to_ini(const PipelineConfig& config);

/// Grid expanded from `cv` around `base`.
CvSettings cv_settings(const PipelineConfig& config);

}  // namespace isa2
