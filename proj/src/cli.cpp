#include "isa2/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <optional>

#include "isa2/config.hpp"
#include "isa2/dataset.hpp"
#include "isa2/error.hpp"
#include "isa2/evaluation.hpp"
#include "isa2/features.hpp"
#include "isa2/fusion.hpp"
#include "isa2/model_io.hpp"
#include "isa2/parallel.hpp"
#include "isa2/synthetic.hpp"
#include "isa2/text.hpp"

namespace isa2 {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::string regime;
    std::string solver;
    bool from_fused = false;
};

PipelineConfig load(const Options& opt) {
    PipelineConfig config = load_pipeline_config(opt.config_path);
    if (opt.seed) config.set_seed(*opt.seed);
    if (opt.jobs) {
        if (*opt.jobs < 1) throw ConfigError("--jobs must be >= 1");
        config.jobs = *opt.jobs;
    }
    if (!opt.regime.empty()) {
        const auto regime = parse_regime(opt.regime);
        if (!regime) throw ConfigError("unknown regime '" + opt.regime + "' (joint|independent)");
        config.regime = *regime;
    }
    if (!opt.solver.empty()) {
        const auto kind = parse_solver(opt.solver);
        if (!kind) throw ConfigError("unknown solver '" + opt.solver + "'");
        config.train.kind = *kind;
    }
    return config;
}

void require(const fs::path& path, std::string_view what, std::string_view producer) {
    if (!fs::exists(path)) {
        throw ConfigError("missing " + std::string(what) + " " + path.string() + " (run `isa2 " + std::string(producer) +
                          "` first)");
    }
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

fs::path model_path(const PipelineConfig& config, ScenarioFilter scope) {
    return config.paths.model_dir / (std::string(to_string(config.regime)) + "_" +
                                     std::string(to_string(config.train.kind)) + "_" +
                                     std::string(scope_name(scope)) + ".model");
}

std::vector<ScenarioFilter> scopes_of(Regime regime) {
    if (regime == Regime::Joint) return {ScenarioFilter::All};
    return {ScenarioFilter::Urban, ScenarioFilter::Highway};
}

FeatureTable load_features(const PipelineConfig& config) {
    require(config.paths.feature_cache, "feature cache", "featurize");
    FeatureTable table = load_feature_table(config.paths.feature_cache);
    if (table.size() == 0) throw ConfigError("empty dataset: feature cache " + config.paths.feature_cache.string());
    return table;
}

TrainedRegime load_trained(const PipelineConfig& config) {
    TrainedRegime trained;
    trained.regime = config.regime;
    trained.solver = config.train.kind;
    for (const auto scope : scopes_of(config.regime)) {
        const fs::path path = model_path(config, scope);
        require(path, "trained model", "train");
        ScopedModel scoped;
        scoped.scope = scope;
        scoped.stored = load_model(path);
        trained.models.push_back(std::move(scoped));
    }
    return trained;
}

int cmd_generate(const PipelineConfig& config, std::ostream& out) {
    if (config.generate.frames_per_scenario_split <= 0) {
        throw ConfigError("empty dataset: frames_per_scenario_split must be > 0");
    }
    const auto dataset = generate_synthetic(config.generate, config.paths.out_dir);
    out << "wrote " << dataset.manifest.samples.size() << " frames to " << config.paths.out_dir.string() << '\n';
    out << "scenario  split  frames  mean_kmh  std_kmh\n";
    for (const Scenario s : kScenarios) {
        for (const Split sp : kSplits) {
            const auto& st = dataset.achieved[index_of(s)][index_of(sp)];
            out << std::left;
            out.width(8);
            out << to_string(s) << "  ";
            out.width(5);
            out << to_string(sp) << "  " << std::right;
            out.width(6);
            out << st.count << "  ";
            out.width(8);
            out << format_fixed(st.mean, 2) << "  ";
            out.width(7);
            out << format_fixed(st.std, 2) << '\n';
        }
    }
    return kExitOk;
}

int cmd_fuse(const PipelineConfig& config, std::ostream& out) {
    require(config.paths.manifest, "manifest", "generate");
    require(config.paths.score_dir, "score-map directory", "generate");
    const Manifest manifest = load_manifest(config.paths.manifest, config.class_count);
    if (manifest.samples.empty()) throw ConfigError("empty dataset: " + config.paths.manifest.string());

    make_dir(config.paths.fused_dir / "labels");
    Manifest fused = manifest;
    fused.base_dir = config.paths.fused_dir;
    fused.source_note = "fused from " + config.paths.score_dir.string();
    parallel_for(manifest.samples.size(), config.jobs, [&](std::size_t i) {
        auto& sample = fused.samples[i];
        const ScoreMapSet set = load_score_map_set(config.paths.score_dir, sample.frame_id);
        const LabelMap labels = argmax_labels(fuse_scales(set));
        sample.label_map_path = "labels/" + sample.frame_id + ".pgm";
        write_label_map(fused.resolve(sample), labels);
    });
    write_manifest(config.paths.fused_dir / "manifest.csv", fused);
    out << "fused " << fused.samples.size() << " frames into " << config.paths.fused_dir.string() << '\n';
    return kExitOk;
}

int cmd_featurize(const PipelineConfig& config, bool from_fused, std::ostream& out) {
    const fs::path manifest_path = from_fused ? config.paths.fused_dir / "manifest.csv" : config.paths.manifest;
    require(manifest_path, "manifest", from_fused ? "fuse" : "generate");
    const Manifest manifest = load_manifest(manifest_path, config.class_count);
    if (manifest.samples.empty()) throw ConfigError("empty dataset: " + manifest_path.string());
    if (manifest.class_count != config.class_count) {
        throw ConfigError("manifest declares " + std::to_string(manifest.class_count) + " classes but [features] class_count is " +
                          std::to_string(config.class_count));
    }
    const FeatureTable table = featurize(manifest, config.pyramid, config.jobs);
    make_dir(config.paths.feature_cache.parent_path());
    write_feature_table(config.paths.feature_cache, table);
    out << "wrote " << table.size() << " descriptors of length " << table.features.cols() << " to "
        << config.paths.feature_cache.string() << '\n';
    return kExitOk;
}

int cmd_train(const PipelineConfig& config, std::ostream& out, std::ostream& err) {
    const FeatureTable table = load_features(config);
    const TrainedRegime trained = train_regime(table, config.train, config.pyramid, config.regime, cv_settings(config));
    make_dir(config.paths.model_dir);
    for (const auto& scoped : trained.models) {
        const fs::path path = model_path(config, scoped.scope);
        save_model(path, scoped.stored);
        out << "saved " << path.string() << '\n';

        err << "train: regime=" << to_string(config.regime) << " scope=" << scope_name(scoped.scope)
            << " levels=" << scoped.stored.levels << " " << scoped.stored.config_text;
        if (const auto* linear = std::get_if<LinearModel>(&scoped.stored.model)) {
            if (linear->kind == LinearKind::Lasso) {
                const auto nonzero = std::count_if(linear->weights.begin(), linear->weights.end(),
                                                   [](double w) { return w != 0.0; });
                err << " converged=" << (linear->converged ? "true" : "false") << " sweeps=" << linear->iterations
                    << " nonzero=" << nonzero;
            }
        }
        if (scoped.cv_mae) err << " cv_mae=" << format_fixed(*scoped.cv_mae, 4);
        err << '\n';
    }
    return kExitOk;
}

int cmd_evaluate(const PipelineConfig& config, std::ostream& out) {
    const FeatureTable table = load_features(config);
    const TrainedRegime trained = load_trained(config);
    EvalReport report;
    report.regime = config.regime;
    report.rows.push_back(evaluate_regime(table, trained));

    make_dir(config.paths.report_dir);
    const std::string stem = "report_" + std::string(to_string(config.regime)) + "_" + std::string(to_string(config.train.kind));
    write_report_csv(config.paths.report_dir / (stem + ".csv"), std::span<const EvalReport>(&report, 1));
    const std::string text = format_report_table(report);
    {
        std::ofstream txt(config.paths.report_dir / (stem + ".txt"), std::ios::trunc);
        if (!txt) throw IoError("cannot write " + (config.paths.report_dir / (stem + ".txt")).string());
        txt << text;
    }
    out << text;
    return kExitOk;
}

int cmd_trace(const PipelineConfig& config, std::ostream& out) {
    const TrainedRegime trained = load_trained(config);
    const FeatureTable table = load_features(config);
    std::array<SpeedTrace, 2> traces;
    const EvalRow row = evaluate_regime(table, trained, &traces);
    make_dir(config.paths.report_dir);
    for (const Scenario s : kScenarios) {
        const std::string name = "trace_" + std::string(to_string(config.regime)) + "_" +
                                 std::string(to_string(config.train.kind)) + "_" + std::string(to_string(s));
        const std::string title = row.method + ", " + std::string(to_string(s)) + " test route, MAE " +
                                  format_fixed(row.mae[index_of(s)], 2) + " km/h";
        export_trace(config.paths.report_dir / name, traces[index_of(s)], title);
        out << "wrote " << (config.paths.report_dir / (name + ".svg")).string() << '\n';
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Proper-speed regression from semantic label maps"};
    app.require_subcommand(1);
    app.fallthrough();
    Options opt;
    app.add_option("--config", opt.config_path, "INI configuration file")->required();
    app.add_option("--seed", opt.seed, "Override [run] seed");
    app.add_option("--jobs", opt.jobs, "Worker threads for fusion and featurization");

    auto* generate = app.add_subcommand("generate", "Write a synthetic dataset");
    auto* fuse = app.add_subcommand("fuse", "Fuse multi-scale score maps into label maps");
    auto* featurize_cmd = app.add_subcommand("featurize", "Compute the pyramid descriptor cache");
    featurize_cmd->add_flag("--from-fused", opt.from_fused, "Read the fused manifest instead of [paths] manifest");
    auto* train = app.add_subcommand("train", "Fit and save the regime's models");
    auto* evaluate = app.add_subcommand("evaluate", "Score saved models on the test split");
    auto* trace = app.add_subcommand("trace", "Export per-frame speed traces");
    for (auto* sub : {train, evaluate, trace}) {
        sub->add_option("--regime", opt.regime, "joint or independent");
        sub->add_option("--solver", opt.solver, "ols, lasso, svr, boosting or mlp");
    }

    // CLI11 wants argv order reversed.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        const PipelineConfig config = load(opt);
        if (generate->parsed()) return cmd_generate(config, out);
        if (fuse->parsed()) return cmd_fuse(config, out);
        if (featurize_cmd->parsed()) return cmd_featurize(config, opt.from_fused, out);
        if (train->parsed()) return cmd_train(config, out, err);
        if (evaluate->parsed()) return cmd_evaluate(config, out);
        if (trace->parsed()) return cmd_trace(config, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        err << "invalid argument: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitConfig;
}

}  // namespace isa2
