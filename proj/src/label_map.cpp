#include "isa2/label_map.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "isa2/error.hpp"

namespace isa2 {

LabelMap::LabelMap(int height, int width, std::uint8_t fill)
    : height_(height), width_(width) {
    if (height <= 0 || width <= 0) {
        throw DataError("label map dimensions must be positive");
    }
    labels_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
}

LabelMap::LabelMap(int height, int width, std::vector<std::uint8_t> labels)
    : height_(height), width_(width), labels_(std::move(labels)) {
    if (height <= 0 || width <= 0) {
        throw DataError("label map dimensions must be positive");
    }
    if (labels_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
        throw DataError("label buffer does not match dimensions");
    }
}

namespace {

// Cursor over the raw file bytes for the ASCII part of the PGM header.
struct HeaderReader {
    const std::string& bytes;
    std::size_t pos = 0;

    void skip_space_and_comments() {
        while (pos < bytes.size()) {
            const auto ch = static_cast<unsigned char>(bytes[pos]);
            if (ch == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(ch)) {
                ++pos;
            } else {
                break;
            }
        }
    }

    long read_uint(const std::filesystem::path& path, const char* what) {
        skip_space_and_comments();
        const std::size_t start = pos;
        long value = 0;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            value = value * 10 + (bytes[pos] - '0');
            if (value > 1'000'000) {
                throw DataError(path.string() + ": PGM " + what + " too large");
            }
            ++pos;
        }
        if (pos == start) {
            throw DataError(path.string() + ": malformed PGM header (" + what + ")");
        }
        return value;
    }
};

}  // namespace

LabelMap load_label_map(const std::filesystem::path& path, int class_count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open label map " + path.string());
    }
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw DataError(path.string() + ": not a binary PGM (expected magic P5)");
    }
    HeaderReader header{bytes, 2};
    const long width = header.read_uint(path, "width");
    const long height = header.read_uint(path, "height");
    const long maxval = header.read_uint(path, "maxval");
    if (width <= 0 || height <= 0) {
        throw DataError(path.string() + ": PGM dimensions must be positive");
    }
    if (maxval != 255) {
        throw DataError(path.string() + ": PGM maxval must be 255, got " + std::to_string(maxval));
    }
    // Exactly one whitespace byte separates the header from the payload.
    if (header.pos >= bytes.size() ||
        !std::isspace(static_cast<unsigned char>(bytes[header.pos]))) {
        throw DataError(path.string() + ": truncated PGM header");
    }
    ++header.pos;

    const std::size_t expected = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() - header.pos < expected) {
        throw DataError(path.string() + ": truncated PGM payload (expected " +
                        std::to_string(expected) + " bytes, found " +
                        std::to_string(bytes.size() - header.pos) + ")");
    }

    std::vector<std::uint8_t> labels(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        const auto value = static_cast<std::uint8_t>(bytes[header.pos + i]);
        if (value != kVoidLabel && value >= class_count) {
            throw DataError(path.string() + ": class id out of range (" + std::to_string(value) +
                            " at pixel " + std::to_string(i) + ", class_count " +
                            std::to_string(class_count) + ")");
        }
        labels[i] = value;
    }
    return LabelMap(static_cast<int>(height), static_cast<int>(width), std::move(labels));
}

void write_label_map(const std::filesystem::path& path, const LabelMap& map) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write label map " + path.string());
    }
    out << "P5\n" << map.width() << ' ' << map.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(map.labels().data()),
              static_cast<std::streamsize>(map.labels().size()));
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

}  // namespace isa2
