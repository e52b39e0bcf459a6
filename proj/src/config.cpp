#include "isa2/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "isa2/error.hpp"
#include "isa2/text.hpp"

namespace isa2 {

namespace pt = boost::property_tree;

void PipelineConfig::set_seed(std::uint64_t value) {
    seed = value;
    generate.rng_seed = value;
    train.seed = value;
}

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
    throw ConfigError("invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

double to_double(std::string_view key, std::string_view value) {
    const auto v = parse_double(value);
    if (!v) bad_value(key, value);
    return *v;
}

int to_int(std::string_view key, std::string_view value) {
    const auto v = parse_u64(value);
    if (!v || *v > 1'000'000'000ULL) bad_value(key, value);
    return static_cast<int>(*v);
}

std::uint64_t to_u64(std::string_view key, std::string_view value) {
    const auto v = parse_u64(value);
    if (!v) bad_value(key, value);
    return *v;
}

bool to_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    bad_value(key, value);
}

struct TrainKey {
    std::string_view name;
    std::function<void(TrainConfig&, std::string_view)> set;
    std::function<std::string(const TrainConfig&)> get;
};

template <typename Member>
TrainKey real_key(std::string_view name, Member member) {
    return {name, [=](TrainConfig& c, std::string_view v) { std::invoke(member, c) = to_double(name, v); },
            [=](const TrainConfig& c) { return format_double(std::invoke(member, c)); }};
}

template <typename Member>
TrainKey int_key(std::string_view name, Member member) {
    return {name, [=](TrainConfig& c, std::string_view v) { std::invoke(member, c) = to_int(name, v); },
            [=](const TrainConfig& c) { return std::to_string(std::invoke(member, c)); }};
}

const std::vector<TrainKey>& train_keys() {
    static const std::vector<TrainKey> keys = {
        real_key("ridge_lambda", [](auto& c) -> auto& { return c.ols.ridge_lambda; }),
        real_key("lasso_lambda", [](auto& c) -> auto& { return c.lasso.lambda; }),
        real_key("lasso_tolerance", [](auto& c) -> auto& { return c.lasso.tolerance; }),
        int_key("lasso_max_sweeps", [](auto& c) -> auto& { return c.lasso.max_sweeps; }),
        real_key("svr_cost", [](auto& c) -> auto& { return c.svr.cost; }),
        real_key("svr_epsilon", [](auto& c) -> auto& { return c.svr.epsilon; }),
        int_key("svr_epochs", [](auto& c) -> auto& { return c.svr.epochs; }),
        real_key("svr_step_offset", [](auto& c) -> auto& { return c.svr.step_offset; }),
        int_key("boost_trees", [](auto& c) -> auto& { return c.boosting.tree_count; }),
        int_key("boost_depth", [](auto& c) -> auto& { return c.boosting.max_depth; }),
        real_key("boost_shrinkage", [](auto& c) -> auto& { return c.boosting.shrinkage; }),
        int_key("mlp_hidden", [](auto& c) -> auto& { return c.mlp.hidden; }),
        int_key("mlp_iterations", [](auto& c) -> auto& { return c.mlp.iterations; }),
        int_key("mlp_lr_switch", [](auto& c) -> auto& { return c.mlp.lr_switch_iteration; }),
        real_key("mlp_lr_initial", [](auto& c) -> auto& { return c.mlp.lr_initial; }),
        real_key("mlp_lr_final", [](auto& c) -> auto& { return c.mlp.lr_final; }),
        real_key("mlp_momentum", [](auto& c) -> auto& { return c.mlp.momentum; }),
        int_key("mlp_batch", [](auto& c) -> auto& { return c.mlp.batch_size; }),
    };
    return keys;
}

const TrainKey* find_train_key(std::string_view name) {
    for (const auto& k : train_keys()) {
        if (k.name == name) return &k;
    }
    return nullptr;
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view text, T (*convert)(std::string_view, std::string_view)) {
    std::vector<T> out;
    for (const auto field : split_csv(text)) {
        const auto item = trim(field);
        if (item.empty()) continue;
        out.push_back(convert(key, item));
    }
    return out;
}

std::string_view identity(std::string_view, std::string_view v) { return v; }

std::string target_key(Scenario s, Split split, std::string_view stat) {
    return std::string(to_string(s)) + "_" + std::string(to_string(split)) + "_" + std::string(stat);
}

std::filesystem::path resolve(const std::filesystem::path& base, std::string_view value) {
    std::filesystem::path p{std::string(value)};
    return p.is_absolute() ? p : (base / p).lexically_normal();
}

}  // namespace

void apply_train_key(TrainConfig& config, std::string_view key, std::string_view value) {
    const auto* k = find_train_key(key);
    if (!k) throw ConfigError("unknown [train] key '" + std::string(key) + "'");
    k->set(config, trim(value));
}

PipelineConfig parse_pipeline_config(const std::string& text, const std::filesystem::path& base_dir) {
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config parse error at line " + std::to_string(e.line()) + ": " + e.message());
    }

    PipelineConfig config;
    auto& paths = config.paths;
    paths.out_dir = resolve(base_dir, paths.out_dir.string());
    paths.manifest = resolve(base_dir, paths.manifest.string());
    paths.score_dir = resolve(base_dir, paths.score_dir.string());
    paths.fused_dir = resolve(base_dir, paths.fused_dir.string());
    paths.feature_cache = resolve(base_dir, paths.feature_cache.string());
    paths.model_dir = resolve(base_dir, paths.model_dir.string());
    paths.report_dir = resolve(base_dir, paths.report_dir.string());
    std::optional<std::uint64_t> seed;

    for (const auto& [section, entries] : tree) {
        if (!entries.data().empty()) throw ConfigError("key '" + section + "' outside of any section");
        for (const auto& [raw_key, node] : entries) {
            const std::string key = raw_key;
            const std::string value{trim(node.data())};
            auto unknown = [&]() -> ConfigError {
                return ConfigError("unknown key '" + key + "' in [" + section + "]");
            };
            if (section == "paths") {
                std::filesystem::path* target = nullptr;
                if (key == "out_dir") target = &paths.out_dir;
                else if (key == "manifest") target = &paths.manifest;
                else if (key == "score_dir") target = &paths.score_dir;
                else if (key == "fused_dir") target = &paths.fused_dir;
                else if (key == "feature_cache") target = &paths.feature_cache;
                else if (key == "model_dir") target = &paths.model_dir;
                else if (key == "report_dir") target = &paths.report_dir;
                else throw unknown();
                *target = resolve(base_dir, value);
            } else if (section == "generate") {
                auto& g = config.generate;
                if (key == "frames_per_scenario_split") g.frames_per_scenario_split = to_int(key, value);
                else if (key == "map_height") g.map_height = to_int(key, value);
                else if (key == "map_width") g.map_width = to_int(key, value);
                else if (key == "noise_std") g.noise_std = to_double(key, value);
                else if (key == "emit_score_maps") g.emit_score_maps = to_bool(key, value);
                else {
                    bool matched = false;
                    for (const Scenario s : kScenarios) {
                        for (const Split sp : kSplits) {
                            auto& t = g.targets[index_of(s)][index_of(sp)];
                            if (key == target_key(s, sp, "mean")) t.mean = to_double(key, value), matched = true;
                            if (key == target_key(s, sp, "std")) t.std = to_double(key, value), matched = true;
                        }
                    }
                    if (!matched) throw unknown();
                }
            } else if (section == "features") {
                if (key == "levels") config.pyramid.levels = to_int(key, value);
                else if (key == "class_count") config.class_count = to_int(key, value);
                else throw unknown();
            } else if (section == "train") {
                if (key == "solver") {
                    const auto kind = parse_solver(value);
                    if (!kind) bad_value(key, value);
                    config.train.kind = *kind;
                } else if (key == "regime") {
                    const auto regime = parse_regime(value);
                    if (!regime) bad_value(key, value);
                    config.regime = *regime;
                } else if (key == "cv_folds") {
                    config.cv.folds = to_int(key, value);
                } else if (key == "cv_parameter") {
                    if (!value.empty() && !find_train_key(value)) bad_value(key, value);
                    config.cv.parameter = value;
                } else if (key == "cv_values") {
                    config.cv.values.clear();
                    for (const auto v : parse_list<std::string_view>(key, value, identity)) config.cv.values.emplace_back(v);
                } else if (key == "cv_levels") {
                    config.cv.levels = parse_list<int>(key, value, to_int);
                } else if (find_train_key(key)) {
                    apply_train_key(config.train, key, value);
                } else {
                    throw unknown();
                }
            } else if (section == "run") {
                if (key == "seed") seed = to_u64(key, value);
                else if (key == "jobs") config.jobs = to_int(key, value);
                else throw unknown();
            } else {
                throw ConfigError("unknown section [" + section + "]");
            }
        }
    }
    config.generate.class_count = config.class_count;
    config.set_seed(seed.value_or(0));

    if (config.pyramid.levels < 1 || config.pyramid.levels > kMaxPyramidLevels) {
        throw ConfigError("[features] levels must be in 1.." + std::to_string(kMaxPyramidLevels));
    }
    if (config.class_count < 1 || config.class_count > 255) throw ConfigError("[features] class_count must be in 1..255");
    if (config.jobs < 1) throw ConfigError("[run] jobs must be >= 1");
    for (const int l : config.cv.levels) {
        if (l < 1 || l > config.pyramid.levels) {
            throw ConfigError("[train] cv_levels entries must be in 1..levels");
        }
    }
    if (config.cv.levels.empty()) throw ConfigError("[train] cv_levels is empty");
    if (!config.cv.parameter.empty() && config.cv.values.empty()) throw ConfigError("[train] cv_values is empty");
    try {
        validate(config.train);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("[train] ") + e.what());
    }
    return config;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_pipeline_config(text.str(), path.parent_path());
}

std::string to_ini(const PipelineConfig& config) {
    std::ostringstream out;
    const auto& p = config.paths;
    out << "[paths]\n"
        << "out_dir = " << p.out_dir.string() << '\n'
        << "manifest = " << p.manifest.string() << '\n'
        << "score_dir = " << p.score_dir.string() << '\n'
        << "fused_dir = " << p.fused_dir.string() << '\n'
        << "feature_cache = " << p.feature_cache.string() << '\n'
        << "model_dir = " << p.model_dir.string() << '\n'
        << "report_dir = " << p.report_dir.string() << "\n\n";
    const auto& g = config.generate;
    out << "[generate]\n"
        << "frames_per_scenario_split = " << g.frames_per_scenario_split << '\n'
        << "map_height = " << g.map_height << '\n'
        << "map_width = " << g.map_width << '\n'
        << "noise_std = " << format_double(g.noise_std) << '\n'
        << "emit_score_maps = " << (g.emit_score_maps ? "true" : "false") << '\n';
    for (const Scenario s : kScenarios) {
        for (const Split sp : kSplits) {
            const auto& t = g.targets[index_of(s)][index_of(sp)];
            out << target_key(s, sp, "mean") << " = " << format_double(t.mean) << '\n'
                << target_key(s, sp, "std") << " = " << format_double(t.std) << '\n';
        }
    }
    out << "\n[features]\nlevels = " << config.pyramid.levels << "\nclass_count = " << config.class_count << "\n\n";
    out << "[train]\nsolver = " << to_string(config.train.kind) << "\nregime = " << to_string(config.regime) << '\n';
    for (const auto& k : train_keys()) out << k.name << " = " << k.get(config.train) << '\n';
    out << "cv_folds = " << config.cv.folds << "\ncv_parameter = " << config.cv.parameter << "\ncv_values = ";
    for (std::size_t i = 0; i < config.cv.values.size(); ++i) out << (i ? "," : "") << config.cv.values[i];
    out << "\ncv_levels = ";
    for (std::size_t i = 0; i < config.cv.levels.size(); ++i) out << (i ? "," : "") << config.cv.levels[i];
    out << "\n\n[run]\nseed = " << config.seed << "\njobs = " << config.jobs << '\n';
    return out.str();
}

CvSettings cv_settings(const PipelineConfig& config) {
    CvSettings settings;
    settings.folds = config.cv.folds;
    settings.levels_grid = config.cv.levels;
    if (config.cv.parameter.empty()) {
        settings.grid.push_back(config.train);
    } else {
        for (const auto& value : config.cv.values) {
            TrainConfig candidate = config.train;
            apply_train_key(candidate, config.cv.parameter, value);
            settings.grid.push_back(candidate);
        }
    }
    return settings;
}

}  // namespace isa2
