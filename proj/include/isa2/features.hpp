#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "isa2/dataset.hpp"
#include "isa2/label_map.hpp"
#include "isa2/matrix.hpp"

namespace isa2 {

inline constexpr int kMaxPyramidLevels = 3;

/// Spatial pyramid depth. Level l (0-based) is a 2^l x 2^l grid of cells.
struct PyramidConfig {
    int levels = kMaxPyramidLevels;  // 1, 2 or 3
};

/// Half-open pixel rectangle [row_begin, row_end) x [col_begin, col_end).
struct CellRect {
    int row_begin = 0;
    int row_end = 0;
    int col_begin = 0;
    int col_end = 0;
};

/// Number of cells over all levels: 1, 5, 21 for L = 1, 2, 3.
std::size_t pyramid_cell_count(int levels);

/// class_count * pyramid_cell_count(levels).
std::size_t descriptor_length(int class_count, int levels);

/// Cell (r, c) of level l, with floor(r*H/2^l) boundaries.
CellRect pyramid_cell(int height, int width, int level, int row, int col);

/// Fraction of non-void pixels per class in `cell`. All-void cells give zeros.
std::vector<double> cell_histogram(const LabelMap& map, const CellRect& cell, int class_count);

/// Level-major, then row-major cells, then class id. The descriptor for fewer
/// levels is a prefix of the one for more levels.
std::vector<double> spp_descriptor(const LabelMap& map, const PyramidConfig& config, int class_count);

/// Per-column affine map to zero mean, unit (population) standard deviation.
struct Standardization {
    std::vector<double> mean;
    std::vector<double> scale;       // 1 for degenerate columns
    std::vector<bool> degenerate;    // zero variance on the fitting matrix

    std::size_t dimension() const { return mean.size(); }
    std::size_t degenerate_count() const;
};

Standardization fit_standardization(const Matrix& x);

/// Degenerate columns map to 0.
Matrix apply_standardization(const Matrix& x, const Standardization& s);
std::vector<double> apply_standardization(std::span<const double> row, const Standardization& s);

/// Descriptors for a set of frames together with their annotations. This is
/// the in-memory form of the feature cache file.
struct FeatureTable {
    int class_count = kDefaultClassCount;
    int levels = kMaxPyramidLevels;
    std::vector<std::string> frame_ids;
    std::vector<Scenario> scenarios;
    std::vector<Split> splits;
    std::vector<double> speeds;
    Matrix features;

    std::size_t size() const { return frame_ids.size(); }

    /// Row indices matching (scenario filter, split), in table order.
    std::vector<std::size_t> select(ScenarioFilter scenario, Split split) const;
};

/// Computes descriptors for every manifest sample. `jobs` > 1 spreads frames
/// over worker threads; results are identical to the serial run.
FeatureTable featurize(const Manifest& manifest, const PyramidConfig& config, int jobs = 1);

/// CSV with header frame_id,f0..f{D-1},speed_kmh,scenario,split. The first
/// comment line records class_count and levels.
void write_feature_table(const std::filesystem::path& path, const FeatureTable& table);
FeatureTable load_feature_table(const std::filesystem::path& path);

}  // namespace isa2
