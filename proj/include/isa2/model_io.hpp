#pragma once

#include <filesystem>
#include <string>

#include "isa2/regressors.hpp"

namespace isa2 {

/// A trained model plus what is needed to feed it: the pyramid depth of its
/// descriptors, the class vocabulary size, and the solver configuration text.
struct StoredModel {
    Model model;
    int levels = kMaxPyramidLevels;
    int class_count = kDefaultClassCount;
    SolverKind solver = SolverKind::Ols;
    std::string config_text;  // describe(TrainConfig)

    friend bool operator==(const StoredModel&, const StoredModel&) = default;
};

/// Binary layout (little-endian) is documented in docs/model_format.md.
std::string serialize_model(const StoredModel& stored);
StoredModel deserialize_model(const std::string& bytes, const std::string& context = "model");

void save_model(const std::filesystem::path& path, const StoredModel& stored);
StoredModel load_model(const std::filesystem::path& path);

}  // namespace isa2
