#include "isa2/dataset.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include "isa2/error.hpp"
#include "isa2/text.hpp"

namespace isa2 {

namespace {
constexpr std::string_view kManifestHeader = "frame_id,label_map_path,scenario,split,speed_kmh";
}

std::string_view to_string(Scenario scenario) {
    return scenario == Scenario::Urban ? "urban" : "highway";
}

std::string_view to_string(Split split) { return split == Split::Train ? "train" : "test"; }

std::optional<Scenario> parse_scenario(std::string_view text) {
    text = trim(text);
    if (text == "urban") return Scenario::Urban;
    if (text == "highway") return Scenario::Highway;
    return std::nullopt;
}

std::optional<Split> parse_split(std::string_view text) {
    text = trim(text);
    if (text == "train") return Split::Train;
    if (text == "test") return Split::Test;
    return std::nullopt;
}

bool matches(ScenarioFilter filter, Scenario scenario) {
    switch (filter) {
        case ScenarioFilter::All: return true;
        case ScenarioFilter::Urban: return scenario == Scenario::Urban;
        case ScenarioFilter::Highway: return scenario == Scenario::Highway;
    }
    return false;
}

LabelMap Manifest::load_map(const Sample& sample) const {
    return load_label_map(resolve(sample), class_count);
}

Manifest load_manifest(const std::filesystem::path& path, int default_class_count) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open manifest " + path.string());
    }

    Manifest manifest;
    manifest.class_count = default_class_count;
    manifest.base_dir = path.parent_path();

    std::string line;
    int line_no = 0;
    bool header_seen = false;
    std::unordered_set<std::string> seen_ids;

    auto fail = [&](const std::string& what) {
        throw DataError(path.string() + ": " + what + " at line " + std::to_string(line_no));
    };

    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (!header_seen) {
            if (view.empty()) continue;
            if (view.front() == '#') {
                auto body = trim(view.substr(1));
                if (body.starts_with("class_count:")) {
                    const auto count = parse_u64(body.substr(12));
                    if (!count || *count == 0 || *count > 255) fail("invalid class_count");
                    manifest.class_count = static_cast<int>(*count);
                } else if (body.starts_with("source:")) {
                    manifest.source_note = std::string(trim(body.substr(7)));
                }
                continue;
            }
            if (view != kManifestHeader) fail("unexpected header");
            header_seen = true;
            continue;
        }
        if (view.empty()) continue;

        const auto fields = split_csv(view);
        if (fields.size() != 5) fail("malformed row (expected 5 fields)");

        Sample sample;
        sample.frame_id = std::string(trim(fields[0]));
        sample.label_map_path = std::string(trim(fields[1]));
        if (sample.frame_id.empty()) fail("empty frame_id");
        if (sample.label_map_path.empty()) fail("empty label_map_path");

        const auto scenario = parse_scenario(fields[2]);
        if (!scenario) fail("unknown scenario '" + std::string(trim(fields[2])) + "'");
        sample.scenario = *scenario;

        const auto split = parse_split(fields[3]);
        if (!split) fail("unknown split '" + std::string(trim(fields[3])) + "'");
        sample.split = *split;

        const auto speed = parse_double(fields[4]);
        if (!speed || !std::isfinite(*speed)) fail("malformed speed");
        if (*speed < 0.0) fail("negative speed");
        sample.speed_kmh = *speed;

        if (!seen_ids.insert(sample.frame_id).second) {
            fail("duplicate frame_id '" + sample.frame_id + "'");
        }
        const auto resolved = manifest.resolve(sample);
        std::ifstream probe(resolved, std::ios::binary);
        if (!probe) {
            throw DataError(path.string() + ": label map for frame '" + sample.frame_id +
                            "' not readable (" + resolved.string() + ") at line " +
                            std::to_string(line_no));
        }
        manifest.samples.push_back(std::move(sample));
    }
    if (!header_seen) {
        throw DataError(path.string() + ": missing header '" + std::string(kManifestHeader) + "'");
    }
    return manifest;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot write manifest " + path.string());
    }
    out << "# class_count: " << manifest.class_count << '\n';
    if (!manifest.source_note.empty()) {
        out << "# source: " << manifest.source_note << '\n';
    }
    out << kManifestHeader << '\n';
    for (const auto& sample : manifest.samples) {
        out << sample.frame_id << ',' << sample.label_map_path << ',' << to_string(sample.scenario)
            << ',' << to_string(sample.split) << ',' << format_double(sample.speed_kmh) << '\n';
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

Manifest filter(const Manifest& manifest, ScenarioFilter scenario, Split split) {
    Manifest subset;
    subset.class_count = manifest.class_count;
    subset.source_note = manifest.source_note;
    subset.base_dir = manifest.base_dir;
    for (const auto& sample : manifest.samples) {
        if (sample.split == split && matches(scenario, sample.scenario)) {
            subset.samples.push_back(sample);
        }
    }
    return subset;
}

}  // namespace isa2
