#include "isa2/cross_validation.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "isa2/evaluation.hpp"

namespace isa2 {

std::pair<std::size_t, std::size_t> fold_range(std::size_t n, int folds, int k) {
    const auto f = static_cast<std::size_t>(folds);
    const auto i = static_cast<std::size_t>(k);
    return {n * i / f, n * (i + 1) / f};
}

namespace {

bool same_mae(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::max(std::abs(a), std::abs(b))); }

// Strict preference: lower MAE, then smaller model, then fewer levels.
bool better(const CvCandidate& a, const CvCandidate& b) {
    if (!same_mae(a.mean_mae, b.mean_mae)) return a.mean_mae < b.mean_mae;
    if (a.complexity != b.complexity) return a.complexity < b.complexity;
    return a.levels < b.levels;
}

}  // namespace

CvResult cross_validate(const Matrix& x, std::span<const double> y, int class_count,
                        std::span<const TrainConfig> grid, std::span<const int> levels_grid, int folds) {
    const std::size_t n = x.rows();
    if (y.size() != n) throw std::invalid_argument("cross_validate: x and y disagree on row count");
    if (folds < 2) throw std::invalid_argument("cross_validate: need at least 2 folds");
    if (grid.empty() || levels_grid.empty()) throw std::invalid_argument("cross_validate: empty grid");
    if (n < static_cast<std::size_t>(folds)) {
        throw std::invalid_argument("cross_validate: " + std::to_string(n) + " rows cannot fill " +
                                    std::to_string(folds) + " folds (each fold needs at least 1 sample)");
    }
    for (const auto& config : grid) {
        if (config.kind != grid.front().kind) throw std::invalid_argument("cross_validate: mixed solver kinds in grid");
        validate(config);
    }
    for (const int levels : levels_grid) {
        if (descriptor_length(class_count, levels) > x.cols()) {
            throw std::invalid_argument("cross_validate: descriptors too short for " + std::to_string(levels) + " levels");
        }
    }

    CvResult result;
    for (const auto& config : grid) {
        for (const int levels : levels_grid) {
            const Matrix xl = x.leading_columns(descriptor_length(class_count, levels));
            CvCandidate candidate;
            candidate.config = config;
            candidate.levels = levels;
            for (int k = 0; k < folds; ++k) {
                const auto [begin, end] = fold_range(n, folds, k);
                std::vector<std::size_t> train_rows;
                std::vector<std::size_t> valid_rows;
                for (std::size_t i = 0; i < n; ++i) (i >= begin && i < end ? valid_rows : train_rows).push_back(i);
                std::vector<double> y_train;
                std::vector<double> y_valid;
                for (const auto i : train_rows) y_train.push_back(y[i]);
                for (const auto i : valid_rows) y_valid.push_back(y[i]);

                const Model model = fit_model(xl.select_rows(train_rows), y_train, config);
                const auto predictions = predict_rows(model, xl.select_rows(valid_rows));
                candidate.fold_mae.push_back(mae(predictions, y_valid));
                candidate.complexity += complexity(model);
            }
            candidate.mean_mae = std::accumulate(candidate.fold_mae.begin(), candidate.fold_mae.end(), 0.0) /
                                 static_cast<double>(folds);
            result.candidates.push_back(std::move(candidate));
        }
    }

    const CvCandidate* best = &result.candidates.front();
    for (const auto& candidate : result.candidates) {
        if (better(candidate, *best)) best = &candidate;
    }
    result.best_config = best->config;
    result.best_pyramid = PyramidConfig{best->levels};
    result.best_mae = best->mean_mae;
    return result;
}

}  // namespace isa2
