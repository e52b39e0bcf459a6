#include "isa2/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include <boost/math/distributions/beta.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "isa2/error.hpp"
#include "isa2/features.hpp"
#include "isa2/fusion.hpp"
#include "isa2/text.hpp"

namespace isa2 {

MomentTable default_moment_targets() {
    MomentTable table{};
    table[index_of(Scenario::Urban)][index_of(Split::Train)] = {19.55, 13.60};
    table[index_of(Scenario::Urban)][index_of(Split::Test)] = {19.59, 14.78};
    table[index_of(Scenario::Highway)][index_of(Split::Train)] = {84.31, 18.15};
    table[index_of(Scenario::Highway)][index_of(Split::Test)] = {95.08, 12.81};
    return table;
}

double PlantedWeights::response(std::span<const double> descriptor) const {
    if (descriptor.size() != weights.size()) {
        throw std::invalid_argument("planted weights: descriptor length mismatch");
    }
    double value = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) value += weights[j] * descriptor[j];
    return value;
}

SplitStatistics describe(std::span<const double> speeds) {
    SplitStatistics stats;
    stats.count = speeds.size();
    if (speeds.empty()) return stats;
    stats.mean = std::accumulate(speeds.begin(), speeds.end(), 0.0) / static_cast<double>(speeds.size());
    double ss = 0.0;
    for (const double s : speeds) ss += (s - stats.mean) * (s - stats.mean);
    stats.std = std::sqrt(ss / static_cast<double>(speeds.size()));
    return stats;
}

namespace {

// Cityscapes train ids used by the synthetic scenes.
enum Class : std::uint8_t {
    kRoad = 0, kSidewalk = 1, kBuilding = 2, kWall = 3, kFence = 4, kPole = 5,
    kTrafficLight = 6, kTrafficSign = 7, kVegetation = 8, kTerrain = 9, kSky = 10,
    kPerson = 11, kRider = 12, kCar = 13, kTruck = 14, kBicycle = 18,
};

constexpr int kGrid = 4;  // level-2 cells per side
constexpr double kDirichletConcentration = 20.0;
constexpr double kMaxVoidFraction = 0.05;

struct ClassShare {
    std::uint8_t label;
    double share;
};

// A class whose pixel fraction in one level-2 cell carries the speed signal.
struct SignalCell {
    int row;
    int col;
    std::uint8_t label;
    double share;  // fraction of the speed range this cell accounts for
};

struct ScenarioLayout {
    std::array<std::vector<ClassShare>, kGrid> background;  // per grid row
    std::vector<SignalCell> signal;
    double max_signal_fraction;  // signal class fraction of a cell at full congestion
};

const ScenarioLayout& layout_for(Scenario scenario) {
    static const ScenarioLayout highway{
        {{
            {{kSky, 0.65}, {kVegetation, 0.25}, {kTrafficSign, 0.05}, {kPole, 0.05}},
            {{kVegetation, 0.35}, {kTerrain, 0.25}, {kSky, 0.2}, {kFence, 0.1}, {kTruck, 0.1}},
            {{kRoad, 0.55}, {kTerrain, 0.2}, {kVegetation, 0.15}, {kFence, 0.1}},
            {{kRoad, 0.9}, {kTerrain, 0.1}},
        }},
        {
            {2, 0, kCar, 0.05}, {2, 1, kCar, 0.15}, {2, 2, kCar, 0.15}, {2, 3, kCar, 0.05},
            {3, 0, kCar, 0.10}, {3, 1, kCar, 0.20}, {3, 2, kCar, 0.20}, {3, 3, kCar, 0.10},
        },
        0.5,
    };
    static const ScenarioLayout urban{
        {{
            {{kBuilding, 0.6}, {kSky, 0.25}, {kTrafficLight, 0.1}, {kPole, 0.05}},
            {{kBuilding, 0.5}, {kVegetation, 0.2}, {kPole, 0.1}, {kTrafficSign, 0.1}, {kWall, 0.1}},
            {{kSidewalk, 0.35}, {kRoad, 0.3}, {kBuilding, 0.2}, {kBicycle, 0.1}, {kRider, 0.05}},
            {{kRoad, 0.6}, {kSidewalk, 0.4}},
        }},
        {
            {2, 0, kPerson, 0.05}, {2, 1, kPerson, 0.10}, {2, 2, kPerson, 0.10}, {2, 3, kPerson, 0.05},
            {3, 0, kCar, 0.15}, {3, 1, kCar, 0.20}, {3, 2, kCar, 0.20}, {3, 3, kCar, 0.15},
        },
        0.6,
    };
    return scenario == Scenario::Urban ? urban : highway;
}

// Free-flow speed of a scenario: large enough that every split's moments are
// reachable by speed = top * (1 - congestion) with congestion ~ Beta.
double top_speed(const SyntheticConfig& config, Scenario scenario) {
    double top = 0.0;
    for (const Split split : kSplits) {
        const auto& t = config.targets[index_of(scenario)][index_of(split)];
        top = std::max({top, t.mean + 3.0 * t.std, t.mean + 1.5 * t.std * t.std / t.mean});
    }
    return top;
}

boost::math::beta_distribution<double> congestion_distribution(const MomentTarget& target, double top) {
    const double m = 1.0 - target.mean / top;
    const double v = (target.std / top) * (target.std / top);
    const double nu = m * (1.0 - m) / v - 1.0;
    return boost::math::beta_distribution<double>(m * nu, (1.0 - m) * nu);
}

std::size_t level2_offset(int class_count, int row, int col, int label) {
    // Levels 0 and 1 contribute 1 + 4 cells ahead of level 2.
    return static_cast<std::size_t>(class_count) * (5 + static_cast<std::size_t>(row * kGrid + col)) +
           static_cast<std::size_t>(label);
}

template <class Rng>
void fisher_yates(std::vector<double>& values, Rng& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        boost::random::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(values[i - 1], values[pick(rng)]);
    }
}

// Splits `total` pixels by `proportions` with largest-remainder rounding.
std::vector<int> apportion(int total, const std::vector<double>& proportions) {
    std::vector<int> counts(proportions.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t k = 0; k < proportions.size(); ++k) {
        const double exact = proportions[k] * total;
        counts[k] = static_cast<int>(std::floor(exact));
        assigned += counts[k];
        remainders.emplace_back(exact - counts[k], k);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++counts[remainders[i % remainders.size()].second];
    return counts;
}

LabelMap synthesize_frame(const SyntheticConfig& config, const ScenarioLayout& layout, double congestion,
                          std::mt19937_64& rng) {
    LabelMap map(config.map_height, config.map_width, kVoidLabel);
    boost::random::uniform_real_distribution<double> jitter(-0.5, 0.5);
    const double spread = std::min(congestion, 1.0 - congestion);

    for (int row = 0; row < kGrid; ++row) {
        const auto& background = layout.background[static_cast<std::size_t>(row)];
        for (int col = 0; col < kGrid; ++col) {
            const CellRect cell = pyramid_cell(config.map_height, config.map_width, 2, row, col);
            const int area = (cell.row_end - cell.row_begin) * (cell.col_end - cell.col_begin);
            boost::random::uniform_int_distribution<int> void_draw(
                0, static_cast<int>(std::floor(kMaxVoidFraction * area)));
            const int void_count = void_draw(rng);
            const int labelled = area - void_count;

            int signal_count = 0;
            std::uint8_t signal_label = kVoidLabel;
            for (const auto& s : layout.signal) {
                if (s.row == row && s.col == col) {
                    const double local = std::clamp(congestion + jitter(rng) * spread, 0.0, 1.0);
                    signal_count = static_cast<int>(std::floor(layout.max_signal_fraction * local * labelled));
                    signal_label = s.label;
                }
            }

            // Dirichlet draw around the row's base mixture.
            std::vector<double> proportions;
            double total = 0.0;
            for (const auto& share : background) {
                boost::random::gamma_distribution<double> gamma(kDirichletConcentration * share.share);
                proportions.push_back(gamma(rng));
                total += proportions.back();
            }
            for (auto& p : proportions) p /= total;
            const auto counts = apportion(labelled - signal_count, proportions);

            // Bands in row-major order: background classes, signal class, then void.
            std::vector<std::uint8_t> fill;
            fill.reserve(static_cast<std::size_t>(area));
            for (std::size_t k = 0; k < background.size(); ++k) fill.insert(fill.end(), counts[k], background[k].label);
            fill.insert(fill.end(), signal_count, signal_label);
            fill.resize(static_cast<std::size_t>(area), kVoidLabel);
            std::size_t next = 0;
            for (int r = cell.row_begin; r < cell.row_end; ++r) {
                for (int c = cell.col_begin; c < cell.col_end; ++c) map.at(r, c) = fill[next++];
            }
        }
    }
    return map;
}

std::string frame_name(Scenario scenario, Split split, int index) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%s_%s_%06d", std::string(to_string(scenario)).c_str(),
                  std::string(to_string(split)).c_str(), index);
    return buffer;
}

}  // namespace

void validate(const SyntheticConfig& config) {
    if (config.frames_per_scenario_split <= 0) throw ConfigError("empty dataset: frames_per_scenario_split must be positive");
    if (config.map_height < kGrid || config.map_width < kGrid) {
        throw ConfigError("map dimensions must be at least 4x4");
    }
    if (config.map_height > 4096 || config.map_width > 4096) throw ConfigError("map dimensions too large");
    if (config.class_count < kDefaultClassCount || config.class_count > 255) {
        throw ConfigError("synthetic scenes need class_count in [19, 255]");
    }
    if (!(config.noise_std >= 0.0) || !std::isfinite(config.noise_std)) {
        throw ConfigError("noise_std must be finite and >= 0");
    }
    for (const Scenario scenario : kScenarios) {
        for (const Split split : kSplits) {
            const auto& t = config.targets[index_of(scenario)][index_of(split)];
            const std::string where = std::string(to_string(scenario)) + "/" + std::string(to_string(split));
            if (!std::isfinite(t.mean) || t.mean <= 0.0) {
                throw ConfigError("infeasible target mean for " + where + " (must be > 0)");
            }
            if (!std::isfinite(t.std) || t.std <= 0.0) {
                throw ConfigError("target std for " + where + " must be > 0");
            }
        }
    }
}

std::array<PlantedWeights, 2> planted_weights(const SyntheticConfig& config) {
    validate(config);
    const std::size_t length = descriptor_length(config.class_count, kMaxPyramidLevels);
    std::array<PlantedWeights, 2> planted;
    for (const Scenario scenario : kScenarios) {
        const auto& layout = layout_for(scenario);
        const double top = top_speed(config, scenario);
        auto& p = planted[index_of(scenario)];
        p.scenario = scenario;
        p.bias = top;
        p.weights.assign(length, 0.0);
        for (const auto& s : layout.signal) {
            p.weights[level2_offset(config.class_count, s.row, s.col, s.label)] =
                -top * s.share / layout.max_signal_fraction;
        }
    }
    return planted;
}

SyntheticDataset generate_synthetic(const SyntheticConfig& config, const std::filesystem::path& out_dir) {
    validate(config);
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "labels", ec);
    if (ec) throw IoError("cannot create " + (out_dir / "labels").string() + ": " + ec.message());
    if (config.emit_score_maps) {
        std::filesystem::create_directories(out_dir / "scores", ec);
        if (ec) throw IoError("cannot create " + (out_dir / "scores").string() + ": " + ec.message());
    }

    SyntheticDataset dataset;
    dataset.planted = planted_weights(config);
    dataset.manifest.class_count = config.class_count;
    dataset.manifest.base_dir = out_dir;
    dataset.manifest.source_note = "synthetic seed=" + std::to_string(config.rng_seed);

    std::mt19937_64 rng(config.rng_seed);
    // Separate stream so enabling score maps leaves the label maps unchanged.
    std::mt19937_64 score_rng(config.rng_seed ^ 0x9e3779b97f4a7c15ULL);
    boost::random::normal_distribution<double> noise(0.0, 1.0);
    boost::random::uniform_real_distribution<double> unit(0.0, 1.0);
    const PyramidConfig pyramid{kMaxPyramidLevels};
    const int n = config.frames_per_scenario_split;

    for (const Scenario scenario : kScenarios) {
        const auto& layout = layout_for(scenario);
        const auto& planted = dataset.planted[index_of(scenario)];
        const double top = top_speed(config, scenario);
        for (const Split split : kSplits) {
            const auto target = config.targets[index_of(scenario)][index_of(split)];
            const auto beta = congestion_distribution(target, top);

            // Stratified quantiles pin the empirical congestion mean to the
            // target; the shuffle removes the ordering.
            std::vector<double> congestion(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                const double u = (i + unit(rng)) / n;
                congestion[static_cast<std::size_t>(i)] = boost::math::quantile(beta, std::clamp(u, 1e-12, 1.0 - 1e-12));
            }
            fisher_yates(congestion, rng);

            std::vector<double> speeds;
            speeds.reserve(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                const LabelMap map = synthesize_frame(config, layout, congestion[static_cast<std::size_t>(i)], rng);
                const auto descriptor = spp_descriptor(map, pyramid, config.class_count);
                const double eps = config.noise_std * noise(rng);
                const double speed = std::max(0.0, planted.response(descriptor) + eps);

                Sample sample;
                sample.frame_id = frame_name(scenario, split, i);
                sample.label_map_path = "labels/" + sample.frame_id + ".pgm";
                sample.scenario = scenario;
                sample.split = split;
                sample.speed_kmh = speed;
                write_label_map(out_dir / sample.label_map_path, map);
                if (config.emit_score_maps) {
                    const auto set = synthesize_score_maps(map, config.class_count, kDefaultScales, score_rng);
                    write_score_map_set(out_dir / "scores", sample.frame_id, set);
                }
                speeds.push_back(speed);
                dataset.manifest.samples.push_back(std::move(sample));
            }
            dataset.achieved[index_of(scenario)][index_of(split)] = describe(speeds);
        }
    }

    write_manifest(out_dir / "manifest.csv", dataset.manifest);
    write_planted_weights(out_dir / "planted_weights.csv", dataset.planted);
    return dataset;
}

void write_planted_weights(const std::filesystem::path& path, const std::array<PlantedWeights, 2>& planted) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "scenario,bias";
    for (std::size_t j = 0; j < planted.front().weights.size(); ++j) out << ",w" << j;
    out << '\n';
    for (const auto& p : planted) {
        out << to_string(p.scenario) << ',' << format_double(p.bias);
        for (const double w : p.weights) out << ',' << format_double(w);
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

std::array<PlantedWeights, 2> load_planted_weights(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::getline(in, line);  // header
    std::array<PlantedWeights, 2> planted;
    std::array<bool, 2> seen{false, false};
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto fields = split_csv(trim(line));
        if (fields.size() < 2) throw DataError(path.string() + ": malformed planted weights row");
        const auto scenario = parse_scenario(fields[0]);
        if (!scenario) throw DataError(path.string() + ": unknown scenario");
        auto& p = planted[index_of(*scenario)];
        p.scenario = *scenario;
        const auto bias = parse_double(fields[1]);
        if (!bias) throw DataError(path.string() + ": malformed bias");
        p.bias = *bias;
        for (std::size_t j = 2; j < fields.size(); ++j) {
            const auto w = parse_double(fields[j]);
            if (!w) throw DataError(path.string() + ": malformed weight");
            p.weights.push_back(*w);
        }
        seen[index_of(*scenario)] = true;
    }
    if (!seen[0] || !seen[1]) throw DataError(path.string() + ": expected one row per scenario");
    return planted;
}

}  // namespace isa2
