#pragma once

#include <cstddef>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "isa2/label_map.hpp"

namespace isa2 {

/// Per-pixel, per-class scores stored (row, column, class).
class ScoreMap {
public:
    ScoreMap() = default;
    ScoreMap(int height, int width, int class_count, float fill = 0.0f);

    int height() const { return height_; }
    int width() const { return width_; }
    int class_count() const { return class_count_; }

    float operator()(int row, int col, int cls) const { return scores_[index(row, col, cls)]; }
    float& operator()(int row, int col, int cls) { return scores_[index(row, col, cls)]; }

    std::span<const float> pixel(int row, int col) const {
        return {scores_.data() + index(row, col, 0), static_cast<std::size_t>(class_count_)};
    }

    const std::vector<float>& scores() const { return scores_; }
    std::vector<float>& scores() { return scores_; }

    friend bool operator==(const ScoreMap&, const ScoreMap&) = default;

private:
    std::size_t index(int row, int col, int cls) const {
        return (static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(col)) * static_cast<std::size_t>(class_count_) +
               static_cast<std::size_t>(cls);
    }

    int height_ = 0;
    int width_ = 0;
    int class_count_ = 0;
    std::vector<float> scores_;
};

struct ScaledScoreMap {
    double scale = 1.0;
    ScoreMap map;
};

/// Score maps of one frame at several input scales.
struct ScoreMapSet {
    std::vector<ScaledScoreMap> entries;
    int reference_height = 0;
    int reference_width = 0;
};

inline const std::vector<double> kDefaultScales = {0.5, 0.75, 1.0};

/// round(scale * reference), halves rounded up.
int scaled_dimension(int reference, double scale);

/// Checks the set invariants: non-empty, strictly increasing scales ending at
/// 1.0, dimensions consistent with the reference, shared class_count, finite
/// scores. Throws DataError.
void validate(const ScoreMapSet& set);

/// output(y, x, c) = input(floor(y*h/H), floor(x*w/W), c).
ScoreMap upsample_nearest(const ScoreMap& map, int target_height, int target_width);

/// Upsamples every entry to the reference size and takes the per-pixel,
/// per-class maximum. Entry order does not matter; only class_count agreement
/// and non-emptiness are required (use validate() for the full contract).
ScoreMap fuse_scales(const ScoreMapSet& set);

/// Smallest class id attaining the per-pixel maximum.
LabelMap argmax_labels(const ScoreMap& map);

/// Binary score-map file: "ISA2SMAP", u32 height, u32 width, u32 class_count,
/// f64 scale, then float32 scores, all little-endian.
void write_score_map(const std::filesystem::path& path, const ScaledScoreMap& entry);
ScaledScoreMap load_score_map(const std::filesystem::path& path);

/// Files are named <frame_id>_<k>.smap, k = 0, 1, ... in ascending scale order.
std::filesystem::path score_map_path(const std::filesystem::path& dir, const std::string& frame_id, std::size_t k);
void write_score_map_set(const std::filesystem::path& dir, const std::string& frame_id, const ScoreMapSet& set);
ScoreMapSet load_score_map_set(const std::filesystem::path& dir, const std::string& frame_id);

/// Builds a score-map set whose fused argmax reproduces `labels` on every
/// non-void pixel. Used to exercise fusion end to end on synthetic data.
ScoreMapSet synthesize_score_maps(const LabelMap& labels, int class_count, std::span<const double> scales,
                                  std::mt19937_64& rng);

}  // namespace isa2
