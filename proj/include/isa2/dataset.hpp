#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "isa2/label_map.hpp"

namespace isa2 {

enum class Scenario { Urban, Highway };
enum class Split { Train, Test };

/// Scenario selector for filtering: a single scenario, or both.
enum class ScenarioFilter { All, Urban, Highway };

inline constexpr Scenario kScenarios[] = {Scenario::Urban, Scenario::Highway};
inline constexpr Split kSplits[] = {Split::Train, Split::Test};

inline std::size_t index_of(Scenario s) { return s == Scenario::Urban ? 0 : 1; }
inline std::size_t index_of(Split s) { return s == Split::Train ? 0 : 1; }

std::string_view to_string(Scenario scenario);
std::string_view to_string(Split split);
std::optional<Scenario> parse_scenario(std::string_view text);
std::optional<Split> parse_split(std::string_view text);

bool matches(ScenarioFilter filter, Scenario scenario);

/// One annotated frame.
struct Sample {
    std::string frame_id;
    std::string label_map_path;  // relative to the manifest's directory
    Scenario scenario = Scenario::Urban;
    Split split = Split::Train;
    double speed_kmh = 0.0;

    friend bool operator==(const Sample&, const Sample&) = default;
};

/// Ordered collection of samples plus the label vocabulary size.
struct Manifest {
    std::vector<Sample> samples;
    int class_count = kDefaultClassCount;
    std::string source_note;
    /// Directory that relative label_map_path entries resolve against.
    std::filesystem::path base_dir;

    std::filesystem::path resolve(const Sample& sample) const { return base_dir / sample.label_map_path; }
    LabelMap load_map(const Sample& sample) const;
};

/// Parses a manifest CSV. Optional leading "# class_count: N" and "# source: ..."
/// comment lines precede the fixed header; without them class_count falls back
/// to `default_class_count`.
Manifest load_manifest(const std::filesystem::path& path,
                       int default_class_count = kDefaultClassCount);

/// Writes the manifest CSV (with the class_count/source comment lines).
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Subset in original order. class_count and base_dir are carried over.
Manifest filter(const Manifest& manifest, ScenarioFilter scenario, Split split);

}  // namespace isa2
