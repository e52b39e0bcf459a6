#pragma once

#include <span>
#include <vector>

#include "isa2/features.hpp"
#include "isa2/regressors.hpp"

namespace isa2 {

struct CvCandidate {
    TrainConfig config;
    int levels = kMaxPyramidLevels;
    double mean_mae = 0.0;
    std::vector<double> fold_mae;
    std::size_t complexity = 0;  // summed over the fold models
};

struct CvResult {
    TrainConfig best_config;
    PyramidConfig best_pyramid;
    double best_mae = 0.0;
    std::vector<CvCandidate> candidates;  // grid order: config-major, then levels
};

/// Half-open row range of fold k out of `folds` contiguous blocks over n rows.
std::pair<std::size_t, std::size_t> fold_range(std::size_t n, int folds, int k);

/// Grid search with contiguous-block K-fold validation. `x` holds descriptors
/// with at least max(levels_grid) pyramid levels for `class_count` classes;
/// shallower pyramids use the leading columns. Every grid entry must share one
/// solver kind. The winner minimizes mean validation MAE; ties go to the
/// smaller model, then to fewer levels.
CvResult cross_validate(const Matrix& x, std::span<const double> y, int class_count,
                        std::span<const TrainConfig> grid, std::span<const int> levels_grid, int folds);

}  // namespace isa2
