#include "isa2/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "isa2/error.hpp"
#include "isa2/text.hpp"

namespace isa2 {

std::string_view to_string(Regime regime) { return regime == Regime::Joint ? "joint" : "independent"; }

std::optional<Regime> parse_regime(std::string_view text) {
    text = trim(text);
    if (text == "joint") return Regime::Joint;
    if (text == "independent") return Regime::Independent;
    return std::nullopt;
}

double mae(std::span<const double> predictions, std::span<const double> truths) {
    if (predictions.size() != truths.size()) throw std::invalid_argument("mae: length mismatch");
    if (predictions.empty()) throw std::invalid_argument("mae: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) sum += std::abs(truths[i] - predictions[i]);
    return sum / static_cast<double>(predictions.size());
}

std::string_view scope_name(ScenarioFilter scope) {
    switch (scope) {
        case ScenarioFilter::All: return "all";
        case ScenarioFilter::Urban: return "urban";
        case ScenarioFilter::Highway: return "highway";
    }
    return "all";
}

const ScopedModel& TrainedRegime::model_for(Scenario scenario) const {
    for (const auto& m : models) {
        if (matches(m.scope, scenario)) return m;
    }
    throw std::logic_error("no model covers scenario " + std::string(to_string(scenario)));
}

namespace {

ScenarioFilter scope_of(Scenario scenario) {
    return scenario == Scenario::Urban ? ScenarioFilter::Urban : ScenarioFilter::Highway;
}

void require_rows(const std::vector<std::size_t>& rows, ScenarioFilter scope, Split split) {
    if (rows.empty()) {
        throw DataError("no " + std::string(to_string(split)) + " rows for scope '" + std::string(scope_name(scope)) + "'");
    }
}

std::vector<double> gather(std::span<const double> values, std::span<const std::size_t> rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto i : rows) out.push_back(values[i]);
    return out;
}

}  // namespace

TrainedRegime train_regime(const FeatureTable& table, const TrainConfig& config, const PyramidConfig& pyramid,
                           Regime regime, const CvSettings& cv) {
    if (pyramid.levels > table.levels) {
        throw ConfigError("requested " + std::to_string(pyramid.levels) + " pyramid levels but the feature cache holds " +
                          std::to_string(table.levels));
    }
    // Both scenarios need test rows in either regime, so the reports line up.
    for (const Scenario s : kScenarios) require_rows(table.select(scope_of(s), Split::Test), scope_of(s), Split::Test);

    std::vector<ScenarioFilter> scopes;
    if (regime == Regime::Joint) {
        scopes = {ScenarioFilter::All};
    } else {
        scopes = {ScenarioFilter::Urban, ScenarioFilter::Highway};
    }

    TrainedRegime trained;
    trained.regime = regime;
    trained.solver = config.kind;
    for (const auto scope : scopes) {
        const auto rows = table.select(scope, Split::Train);
        require_rows(rows, scope, Split::Train);
        const Matrix x = table.features.select_rows(rows);
        const auto y = gather(table.speeds, rows);

        TrainConfig chosen = config;
        PyramidConfig chosen_pyramid = pyramid;
        std::optional<double> cv_mae;
        if (cv.enabled()) {
            const auto result = cross_validate(x, y, table.class_count, cv.grid, cv.levels_grid, cv.folds);
            chosen = result.best_config;
            chosen_pyramid = result.best_pyramid;
            cv_mae = result.best_mae;
        }
        const Matrix xl = x.leading_columns(descriptor_length(table.class_count, chosen_pyramid.levels));

        ScopedModel scoped;
        scoped.scope = scope;
        scoped.cv_mae = cv_mae;
        scoped.stored.model = fit_model(xl, y, chosen);
        scoped.stored.levels = chosen_pyramid.levels;
        scoped.stored.class_count = table.class_count;
        scoped.stored.solver = chosen.kind;
        scoped.stored.config_text = describe(chosen);
        trained.models.push_back(std::move(scoped));
    }
    return trained;
}

std::string config_digest(const TrainedRegime& trained) {
    std::string canonical;
    for (const auto& m : trained.models) {
        canonical += std::string(scope_name(m.scope)) + ":levels=" + std::to_string(m.stored.levels) + ";" +
                     m.stored.config_text + "|";
    }
    return fnv1a_hex(canonical);
}

SpeedTrace predict_trace(const FeatureTable& table, std::span<const std::size_t> rows, const StoredModel& stored) {
    if (stored.class_count != table.class_count || stored.levels > table.levels) {
        throw ConfigError("model expects " + std::to_string(stored.class_count) + " classes at " +
                          std::to_string(stored.levels) + " levels; feature cache has " +
                          std::to_string(table.class_count) + " classes at " + std::to_string(table.levels));
    }
    const std::size_t d = descriptor_length(stored.class_count, stored.levels);
    SpeedTrace trace;
    trace.reserve(rows.size());
    for (const auto i : rows) {
        const auto row = table.features.row(i).first(d);
        trace.push_back({table.frame_ids[i], table.speeds[i], predict(stored.model, row)});
    }
    return trace;
}

EvalRow evaluate_regime(const FeatureTable& table, const TrainedRegime& trained, std::array<SpeedTrace, 2>* traces) {
    EvalRow row;
    row.method = method_name(trained.solver);
    row.config_digest = config_digest(trained);
    for (const Scenario s : kScenarios) {
        const auto rows = table.select(scope_of(s), Split::Test);
        require_rows(rows, scope_of(s), Split::Test);
        SpeedTrace trace = predict_trace(table, rows, trained.model_for(s).stored);
        std::vector<double> predictions;
        std::vector<double> truths;
        for (const auto& p : trace) {
            predictions.push_back(p.predicted_kmh);
            truths.push_back(p.truth_kmh);
        }
        row.mae[index_of(s)] = mae(predictions, truths);
        row.n_test[index_of(s)] = rows.size();
        if (traces) (*traces)[index_of(s)] = std::move(trace);
    }
    return row;
}

EvalReport run_regime(const FeatureTable& table, const TrainConfig& config, const PyramidConfig& pyramid,
                      Regime regime, const CvSettings& cv) {
    EvalReport report;
    report.regime = regime;
    report.rows.push_back(evaluate_regime(table, train_regime(table, config, pyramid, regime, cv)));
    return report;
}

std::string format_report_table(const EvalReport& report) {
    std::size_t width = std::string_view("Method").size();
    for (const auto& row : report.rows) width = std::max(width, row.method.size());
    std::ostringstream out;
    out << "Regime: " << to_string(report.regime)
        << (report.regime == Regime::Joint ? " (one regressor for both scenarios)\n"
                                           : " (one regressor per scenario)\n");
    out << std::left << std::setw(static_cast<int>(width)) << "Method" << "  " << std::right << std::setw(18)
        << "Urban MAE (km/h)" << "  " << std::setw(20) << "Highway MAE (km/h)" << '\n';
    for (const auto& row : report.rows) {
        out << std::left << std::setw(static_cast<int>(width)) << row.method << "  " << std::right << std::setw(18)
            << format_fixed(row.mae[index_of(Scenario::Urban)], 2) << "  " << std::setw(20)
            << format_fixed(row.mae[index_of(Scenario::Highway)], 2) << '\n';
    }
    return out.str();
}

void write_report_csv(const std::filesystem::path& path, std::span<const EvalReport> reports) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write report " + path.string());
    out << "regime,method,scenario,mae_kmh,n_test,config_digest\n";
    for (const auto& report : reports) {
        for (const auto& row : report.rows) {
            for (const Scenario s : kScenarios) {
                out << to_string(report.regime) << ',' << row.method << ',' << to_string(s) << ','
                    << format_double(row.mae[index_of(s)]) << ',' << row.n_test[index_of(s)] << ','
                    << row.config_digest << '\n';
            }
        }
    }
    if (!out) throw IoError("write failed for " + path.string());
}

void write_trace_csv(const std::filesystem::path& path, const SpeedTrace& trace) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write trace " + path.string());
    out << "frame_id,true_kmh,pred_kmh\n";
    for (const auto& p : trace) {
        out << p.frame_id << ',' << format_double(p.truth_kmh) << ',' << format_double(p.predicted_kmh) << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

SpeedTrace load_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace " + path.string());
    std::string line;
    if (!std::getline(in, line) || trim(line) != "frame_id,true_kmh,pred_kmh") {
        throw DataError(path.string() + ": unexpected trace header");
    }
    SpeedTrace trace;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv(trim(line));
        const auto truth = fields.size() == 3 ? parse_double(fields[1]) : std::nullopt;
        const auto pred = fields.size() == 3 ? parse_double(fields[2]) : std::nullopt;
        if (!truth || !pred) throw DataError(path.string() + ": malformed row at line " + std::to_string(line_no));
        trace.push_back({std::string(fields[0]), *truth, *pred});
    }
    return trace;
}

std::string render_trace_svg(const SpeedTrace& trace, std::string_view title) {
    constexpr double kWidth = 800.0;
    constexpr double kHeight = 320.0;
    constexpr double kLeft = 60.0;
    constexpr double kRight = 20.0;
    constexpr double kTop = 30.0;
    constexpr double kBottom = 45.0;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;

    double y_max = 1.0;
    for (const auto& p : trace) y_max = std::max({y_max, p.truth_kmh, p.predicted_kmh});
    y_max = std::ceil(y_max / 10.0) * 10.0;
    const double x_span = trace.size() > 1 ? static_cast<double>(trace.size() - 1) : 1.0;

    auto px = [&](std::size_t i) { return kLeft + plot_w * static_cast<double>(i) / x_span; };
    auto py = [&](double v) { return kTop + plot_h * (1.0 - v / y_max); };
    auto polyline = [&](auto value_of, std::string_view color) {
        std::string points;
        for (std::size_t i = 0; i < trace.size(); ++i) {
            if (i) points += ' ';
            points += format_fixed(px(i), 2) + "," + format_fixed(py(value_of(trace[i])), 2);
        }
        return "  <polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.2\" points=\"" +
               points + "\"/>\n";
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    svg << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "  <text x=\"" << kWidth / 2 << "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << title << "</text>\n";
    // Axes and ticks.
    svg << "  <line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
        << kTop + plot_h << "\" stroke=\"black\"/>\n";
    svg << "  <line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
        << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = y_max * k / 4.0;
        svg << "  <text x=\"" << kLeft - 6 << "\" y=\"" << format_fixed(py(v) + 4, 2)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << format_fixed(v, 0) << "</text>\n";
    }
    svg << "  <text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">frame index</text>\n";
    svg << "  <text x=\"14\" y=\"" << kTop + plot_h / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"11\" transform=\"rotate(-90 14 " << kTop + plot_h / 2 << ")\">speed (km/h)</text>\n";
    svg << polyline([](const TracePoint& p) { return p.truth_kmh; }, "blue");
    svg << polyline([](const TracePoint& p) { return p.predicted_kmh; }, "red");
    svg << "  <text x=\"" << kLeft + 10 << "\" y=\"" << kTop + 12
        << "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"blue\">proper speed</text>\n";
    svg << "  <text x=\"" << kLeft + 100 << "\" y=\"" << kTop + 12
        << "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"red\">estimated</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

void export_trace(const std::filesystem::path& stem, const SpeedTrace& trace, std::string_view title) {
    auto csv = stem;
    csv += ".csv";
    auto svg_path = stem;
    svg_path += ".svg";
    write_trace_csv(csv, trace);
    std::ofstream out(svg_path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + svg_path.string());
    out << render_trace_svg(trace, title);
    if (!out) throw IoError("write failed for " + svg_path.string());
}

}  // namespace isa2
