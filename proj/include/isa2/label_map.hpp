#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace isa2 {

/// Pixel value marking an unlabeled pixel. Excluded from every histogram.
inline constexpr std::uint8_t kVoidLabel = 255;

/// Default number of semantic classes (the 19 Cityscapes training classes).
inline constexpr int kDefaultClassCount = 19;

/// Dense per-pixel class ids for one frame, row-major.
class LabelMap {
public:
    LabelMap() = default;
    LabelMap(int height, int width, std::uint8_t fill = 0);
    LabelMap(int height, int width, std::vector<std::uint8_t> labels);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return labels_.size(); }

    std::uint8_t at(int row, int col) const { return labels_[index(row, col)]; }
    std::uint8_t& at(int row, int col) { return labels_[index(row, col)]; }

    const std::vector<std::uint8_t>& labels() const { return labels_; }

    friend bool operator==(const LabelMap&, const LabelMap&) = default;

private:
    std::size_t index(int row, int col) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(col);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> labels_;
};

/// Reads a binary PGM (P5, maxval 255). Every pixel must be < class_count or
/// equal to kVoidLabel.
LabelMap load_label_map(const std::filesystem::path& path, int class_count);

/// Writes a binary PGM (P5, maxval 255). Header is "P5\n<w> <h>\n255\n".
void write_label_map(const std::filesystem::path& path, const LabelMap& map);

}  // namespace isa2
