#include "isa2/fusion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <boost/random/uniform_real_distribution.hpp>

#include "isa2/error.hpp"
#include "byte_io.hpp"

namespace isa2 {

using detail::get_le;
using detail::put_le;

ScoreMap::ScoreMap(int height, int width, int class_count, float fill)
    : height_(height), width_(width), class_count_(class_count) {
    if (height <= 0 || width <= 0 || class_count <= 0) {
        throw DataError("score map dimensions must be positive");
    }
    scores_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                       static_cast<std::size_t>(class_count),
                   fill);
}

int scaled_dimension(int reference, double scale) {
    return static_cast<int>(std::floor(scale * reference + 0.5));
}

void validate(const ScoreMapSet& set) {
    if (set.entries.empty()) throw DataError("score map set is empty");
    if (set.reference_height <= 0 || set.reference_width <= 0) {
        throw DataError("score map set has no reference dimensions");
    }
    const int classes = set.entries.front().map.class_count();
    double previous = 0.0;
    for (const auto& entry : set.entries) {
        if (!(entry.scale > previous) || entry.scale > 1.0) {
            throw DataError("score map scales must be strictly increasing within (0, 1]");
        }
        previous = entry.scale;
        if (entry.map.class_count() != classes) {
            throw DataError("score maps disagree on class_count");
        }
        if (entry.map.height() != scaled_dimension(set.reference_height, entry.scale) ||
            entry.map.width() != scaled_dimension(set.reference_width, entry.scale)) {
            throw DataError("score map at scale " + std::to_string(entry.scale) +
                            " does not match the reference dimensions");
        }
        for (const float v : entry.map.scores()) {
            if (!std::isfinite(v)) throw DataError("score map holds a non-finite score");
        }
    }
    if (set.entries.back().scale != 1.0) throw DataError("largest score map scale must be 1.0");
}

ScoreMap upsample_nearest(const ScoreMap& map, int target_height, int target_width) {
    if (target_height < map.height() || target_width < map.width()) {
        throw std::invalid_argument("upsample_nearest: target smaller than source");
    }
    ScoreMap out(target_height, target_width, map.class_count());
    const long h = map.height();
    const long w = map.width();
    for (int y = 0; y < target_height; ++y) {
        const int sy = static_cast<int>(y * h / target_height);
        for (int x = 0; x < target_width; ++x) {
            const int sx = static_cast<int>(x * w / target_width);
            const auto src = map.pixel(sy, sx);
            for (int c = 0; c < map.class_count(); ++c) out(y, x, c) = src[static_cast<std::size_t>(c)];
        }
    }
    return out;
}

ScoreMap fuse_scales(const ScoreMapSet& set) {
    if (set.entries.empty()) throw DataError("fuse_scales: empty score map set");
    const int classes = set.entries.front().map.class_count();
    for (const auto& entry : set.entries) {
        if (entry.map.class_count() != classes) throw DataError("fuse_scales: mismatched class_count");
    }
    ScoreMap fused = upsample_nearest(set.entries.front().map, set.reference_height, set.reference_width);
    for (std::size_t k = 1; k < set.entries.size(); ++k) {
        const ScoreMap up = upsample_nearest(set.entries[k].map, set.reference_height, set.reference_width);
        auto& dst = fused.scores();
        const auto& src = up.scores();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::max(dst[i], src[i]);
    }
    return fused;
}

LabelMap argmax_labels(const ScoreMap& map) {
    LabelMap labels(map.height(), map.width());
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) {
            const auto scores = map.pixel(y, x);
            // max_element returns the first maximum, i.e. the lowest class id.
            const auto best = std::max_element(scores.begin(), scores.end());
            labels.at(y, x) = static_cast<std::uint8_t>(std::distance(scores.begin(), best));
        }
    }
    return labels;
}

namespace {

constexpr std::array<char, 8> kScoreMagic = {'I', 'S', 'A', '2', 'S', 'M', 'A', 'P'};

constexpr std::size_t kHeaderBytes = 8 + 4 + 4 + 4 + 8;

}  // namespace

void write_score_map(const std::filesystem::path& path, const ScaledScoreMap& entry) {
    std::string bytes(kScoreMagic.begin(), kScoreMagic.end());
    bytes.reserve(kHeaderBytes + entry.map.scores().size() * 4);
    put_le(bytes, static_cast<std::uint32_t>(entry.map.height()));
    put_le(bytes, static_cast<std::uint32_t>(entry.map.width()));
    put_le(bytes, static_cast<std::uint32_t>(entry.map.class_count()));
    put_le(bytes, entry.scale);
    for (const float v : entry.map.scores()) put_le(bytes, v);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write score map " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

ScaledScoreMap load_score_map(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open score map " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < kHeaderBytes || !std::equal(kScoreMagic.begin(), kScoreMagic.end(), bytes.begin())) {
        throw DataError(path.string() + ": not a score map (bad magic)");
    }
    const auto height = get_le<std::uint32_t>(bytes, 8);
    const auto width = get_le<std::uint32_t>(bytes, 12);
    const auto classes = get_le<std::uint32_t>(bytes, 16);
    const auto scale = get_le<double>(bytes, 20);
    if (height == 0 || width == 0 || classes == 0 || height > 1u << 16 || width > 1u << 16 || classes > 255) {
        throw DataError(path.string() + ": implausible score map header");
    }
    const std::size_t count = std::size_t{height} * width * classes;
    if (bytes.size() != kHeaderBytes + count * 4) {
        throw DataError(path.string() + ": score map payload size mismatch");
    }
    ScaledScoreMap entry{scale, ScoreMap(static_cast<int>(height), static_cast<int>(width), static_cast<int>(classes))};
    auto& scores = entry.map.scores();
    for (std::size_t i = 0; i < count; ++i) scores[i] = get_le<float>(bytes, kHeaderBytes + 4 * i);
    return entry;
}

std::filesystem::path score_map_path(const std::filesystem::path& dir, const std::string& frame_id, std::size_t k) {
    return dir / (frame_id + "_" + std::to_string(k) + ".smap");
}

void write_score_map_set(const std::filesystem::path& dir, const std::string& frame_id, const ScoreMapSet& set) {
    for (std::size_t k = 0; k < set.entries.size(); ++k) {
        write_score_map(score_map_path(dir, frame_id, k), set.entries[k]);
    }
}

ScoreMapSet load_score_map_set(const std::filesystem::path& dir, const std::string& frame_id) {
    ScoreMapSet set;
    for (std::size_t k = 0;; ++k) {
        const auto path = score_map_path(dir, frame_id, k);
        if (!std::filesystem::exists(path)) break;
        set.entries.push_back(load_score_map(path));
    }
    if (set.entries.empty()) {
        throw IoError("no score maps for frame '" + frame_id + "' in " + dir.string());
    }
    set.reference_height = set.entries.back().map.height();
    set.reference_width = set.entries.back().map.width();
    validate(set);
    return set;
}

ScoreMapSet synthesize_score_maps(const LabelMap& labels, int class_count, std::span<const double> scales,
                                  std::mt19937_64& rng) {
    // True class at full scale scores in [0.6, 1); everything else stays below
    // 0.5, so the fused argmax recovers every labelled pixel.
    boost::random::uniform_real_distribution<float> background(0.0f, 0.5f);
    boost::random::uniform_real_distribution<float> full_hit(0.6f, 1.0f);
    boost::random::uniform_real_distribution<float> coarse_hit(0.3f, 0.5f);

    ScoreMapSet set;
    set.reference_height = labels.height();
    set.reference_width = labels.width();
    for (const double scale : scales) {
        const int h = scaled_dimension(labels.height(), scale);
        const int w = scaled_dimension(labels.width(), scale);
        ScoreMap map(h, w, class_count);
        const bool full = scale == 1.0;
        for (int y = 0; y < h; ++y) {
            const int sy = static_cast<int>(static_cast<long>(y) * labels.height() / h);
            for (int x = 0; x < w; ++x) {
                const int sx = static_cast<int>(static_cast<long>(x) * labels.width() / w);
                const auto truth = labels.at(sy, sx);
                for (int c = 0; c < class_count; ++c) {
                    map(y, x, c) = (c == truth) ? (full ? full_hit(rng) : coarse_hit(rng)) : background(rng);
                }
            }
        }
        set.entries.push_back({scale, std::move(map)});
    }
    return set;
}

}  // namespace isa2
