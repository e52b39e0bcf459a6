#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "isa2/cross_validation.hpp"
#include "isa2/features.hpp"
#include "isa2/model_io.hpp"

namespace isa2 {

/// Joint: one regressor for both scenarios. Independent: one per scenario.
enum class Regime { Joint, Independent };

std::string_view to_string(Regime regime);
std::optional<Regime> parse_regime(std::string_view text);

/// Mean absolute error (1/K) sum |truth - prediction|.
double mae(std::span<const double> predictions, std::span<const double> truths);

/// Optional grid search run on each regime's training rows before the final fit.
struct CvSettings {
    int folds = 0;  // < 2 disables cross-validation
    std::vector<TrainConfig> grid;
    std::vector<int> levels_grid;

    bool enabled() const { return folds >= 2 && !grid.empty() && !levels_grid.empty(); }
};

struct ScopedModel {
    ScenarioFilter scope = ScenarioFilter::All;
    StoredModel stored;
    std::optional<double> cv_mae;
};

struct TrainedRegime {
    Regime regime = Regime::Joint;
    SolverKind solver = SolverKind::Ols;
    std::vector<ScopedModel> models;  // Joint: {All}; Independent: {Urban, Highway}

    const ScopedModel& model_for(Scenario scenario) const;
};

/// Scope names used in file names: "all", "urban", "highway".
std::string_view scope_name(ScenarioFilter scope);

/// Fits the regime's models on the table's training rows. Throws DataError if
/// a required training partition is empty.
TrainedRegime train_regime(const FeatureTable& table, const TrainConfig& config, const PyramidConfig& pyramid,
                           Regime regime, const CvSettings& cv = {});

/// Hash of every scope's (levels, hyperparameters).
std::string config_digest(const TrainedRegime& trained);

struct TracePoint {
    std::string frame_id;
    double truth_kmh = 0.0;
    double predicted_kmh = 0.0;
};
using SpeedTrace = std::vector<TracePoint>;

/// Predictions for `rows` of the table (in the given order).
SpeedTrace predict_trace(const FeatureTable& table, std::span<const std::size_t> rows, const StoredModel& stored);

struct EvalRow {
    std::string method;
    std::array<double, 2> mae{};             // [scenario]
    std::array<std::size_t, 2> n_test{};     // [scenario]
    std::string config_digest;
};

struct EvalReport {
    Regime regime = Regime::Joint;
    std::vector<EvalRow> rows;
};

/// Scores each scenario's test rows with the regime's applicable model.
/// `traces`, when given, receives the per-scenario predictions in table order.
EvalRow evaluate_regime(const FeatureTable& table, const TrainedRegime& trained,
                        std::array<SpeedTrace, 2>* traces = nullptr);

/// train_regime followed by evaluate_regime.
EvalReport run_regime(const FeatureTable& table, const TrainConfig& config, const PyramidConfig& pyramid,
                      Regime regime, const CvSettings& cv = {});

/// Aligned text table, MAE to 2 decimals.
std::string format_report_table(const EvalReport& report);

/// CSV with header regime,method,scenario,mae_kmh,n_test,config_digest.
void write_report_csv(const std::filesystem::path& path, std::span<const EvalReport> reports);

/// frame_id,true_kmh,pred_kmh
void write_trace_csv(const std::filesystem::path& path, const SpeedTrace& trace);
SpeedTrace load_trace_csv(const std::filesystem::path& path);

/// Standalone SVG with the true (blue) and predicted (red) speed polylines.
std::string render_trace_svg(const SpeedTrace& trace, std::string_view title);

/// Writes <stem>.csv and <stem>.svg.
void export_trace(const std::filesystem::path& stem, const SpeedTrace& trace, std::string_view title);

}  // namespace isa2
