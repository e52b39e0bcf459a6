#include "isa2/features.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "isa2/error.hpp"
#include "isa2/parallel.hpp"
#include "isa2/text.hpp"

namespace isa2 {

namespace {

void check_levels(int levels) {
    if (levels < 1 || levels > kMaxPyramidLevels) {
        throw std::invalid_argument("pyramid levels must be in [1, 3], got " + std::to_string(levels));
    }
}

}  // namespace

std::size_t pyramid_cell_count(int levels) {
    check_levels(levels);
    std::size_t cells = 0;
    for (int l = 0; l < levels; ++l) cells += std::size_t{1} << (2 * l);
    return cells;
}

std::size_t descriptor_length(int class_count, int levels) {
    return static_cast<std::size_t>(class_count) * pyramid_cell_count(levels);
}

CellRect pyramid_cell(int height, int width, int level, int row, int col) {
    const long cells = 1L << level;
    return CellRect{
        static_cast<int>(row * static_cast<long>(height) / cells),
        static_cast<int>((row + 1) * static_cast<long>(height) / cells),
        static_cast<int>(col * static_cast<long>(width) / cells),
        static_cast<int>((col + 1) * static_cast<long>(width) / cells),
    };
}

std::vector<double> cell_histogram(const LabelMap& map, const CellRect& cell, int class_count) {
    if (cell.row_begin < 0 || cell.col_begin < 0 || cell.row_end > map.height() ||
        cell.col_end > map.width()) {
        throw std::invalid_argument("cell_histogram: rectangle out of bounds");
    }
    if (cell.row_end <= cell.row_begin || cell.col_end <= cell.col_begin) {
        throw std::invalid_argument("cell_histogram: empty rectangle");
    }
    std::vector<long> counts(static_cast<std::size_t>(class_count), 0);
    long labelled = 0;
    for (int r = cell.row_begin; r < cell.row_end; ++r) {
        for (int c = cell.col_begin; c < cell.col_end; ++c) {
            const auto label = map.at(r, c);
            if (label == kVoidLabel) continue;
            if (label >= class_count) {
                throw DataError("cell_histogram: class id " + std::to_string(label) +
                                " out of range for class_count " + std::to_string(class_count));
            }
            ++counts[label];
            ++labelled;
        }
    }
    std::vector<double> histogram(counts.size(), 0.0);
    if (labelled == 0) return histogram;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        histogram[k] = static_cast<double>(counts[k]) / static_cast<double>(labelled);
    }
    return histogram;
}

std::vector<double> spp_descriptor(const LabelMap& map, const PyramidConfig& config, int class_count) {
    check_levels(config.levels);
    const int finest = 1 << (config.levels - 1);
    if (map.height() < finest || map.width() < finest) {
        throw std::invalid_argument("spp_descriptor: map " + std::to_string(map.height()) + "x" +
                                    std::to_string(map.width()) + " too small for " +
                                    std::to_string(config.levels) + " pyramid levels");
    }
    std::vector<double> descriptor;
    descriptor.reserve(descriptor_length(class_count, config.levels));
    for (int level = 0; level < config.levels; ++level) {
        const int cells = 1 << level;
        for (int row = 0; row < cells; ++row) {
            for (int col = 0; col < cells; ++col) {
                const auto histogram =
                    cell_histogram(map, pyramid_cell(map.height(), map.width(), level, row, col), class_count);
                descriptor.insert(descriptor.end(), histogram.begin(), histogram.end());
            }
        }
    }
    return descriptor;
}

std::size_t Standardization::degenerate_count() const {
    std::size_t count = 0;
    for (const bool flag : degenerate) count += flag ? 1 : 0;
    return count;
}

Standardization fit_standardization(const Matrix& x) {
    if (x.empty()) throw std::invalid_argument("fit_standardization: empty matrix");
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    Standardization s;
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 1.0);
    s.degenerate.assign(d, false);
    for (std::size_t r = 0; r < n; ++r) {
        const auto row = x.row(r);
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += row[j];
    }
    for (auto& m : s.mean) m /= static_cast<double>(n);

    std::vector<double> variance(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const auto row = x.row(r);
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = row[j] - s.mean[j];
            variance[j] += diff * diff;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        const double sd = std::sqrt(variance[j] / static_cast<double>(n));
        // Relative floor: a column whose spread is pure rounding noise is constant.
        if (!(sd > 1e-12 * std::max(1.0, std::abs(s.mean[j])))) {
            s.degenerate[j] = true;
            s.scale[j] = 1.0;
        } else {
            s.scale[j] = sd;
        }
    }
    return s;
}

std::vector<double> apply_standardization(std::span<const double> row, const Standardization& s) {
    if (row.size() != s.dimension()) {
        throw std::invalid_argument("apply_standardization: dimension mismatch");
    }
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
        out[j] = s.degenerate[j] ? 0.0 : (row[j] - s.mean[j]) / s.scale[j];
    }
    return out;
}

Matrix apply_standardization(const Matrix& x, const Standardization& s) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto row = apply_standardization(x.row(r), s);
        std::copy(row.begin(), row.end(), out.row(r).begin());
    }
    return out;
}

std::vector<std::size_t> FeatureTable::select(ScenarioFilter scenario, Split split) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < size(); ++i) {
        if (splits[i] == split && matches(scenario, scenarios[i])) rows.push_back(i);
    }
    return rows;
}

FeatureTable featurize(const Manifest& manifest, const PyramidConfig& config, int jobs) {
    const std::size_t n = manifest.samples.size();
    const std::size_t d = descriptor_length(manifest.class_count, config.levels);
    FeatureTable table;
    table.class_count = manifest.class_count;
    table.levels = config.levels;
    table.features = Matrix(n, d);
    parallel_for(n, jobs, [&](std::size_t i) {
        const auto map = manifest.load_map(manifest.samples[i]);
        const auto descriptor = spp_descriptor(map, config, manifest.class_count);
        std::copy(descriptor.begin(), descriptor.end(), table.features.row(i).begin());
    });
    for (const auto& sample : manifest.samples) {
        table.frame_ids.push_back(sample.frame_id);
        table.scenarios.push_back(sample.scenario);
        table.splits.push_back(sample.split);
        table.speeds.push_back(sample.speed_kmh);
    }
    return table;
}

void write_feature_table(const std::filesystem::path& path, const FeatureTable& table) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write feature cache " + path.string());
    out << "# class_count: " << table.class_count << ", levels: " << table.levels << '\n';
    out << "frame_id";
    for (std::size_t j = 0; j < table.features.cols(); ++j) out << ",f" << j;
    out << ",speed_kmh,scenario,split\n";
    for (std::size_t i = 0; i < table.size(); ++i) {
        out << table.frame_ids[i];
        for (const double v : table.features.row(i)) out << ',' << format_double(v);
        out << ',' << format_double(table.speeds[i]) << ',' << to_string(table.scenarios[i]) << ','
            << to_string(table.splits[i]) << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

FeatureTable load_feature_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open feature cache " + path.string());

    FeatureTable table;
    std::string line;
    int line_no = 0;
    std::size_t dimension = 0;
    bool header_seen = false;
    bool levels_known = false;
    auto fail = [&](const std::string& what) {
        throw DataError(path.string() + ": " + what + " at line " + std::to_string(line_no));
    };

    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty()) continue;
        if (!header_seen) {
            if (view.front() == '#') {
                // "# class_count: C, levels: L"
                const auto body = view.substr(1);
                const auto cc = body.find("class_count:");
                const auto lv = body.find("levels:");
                if (cc != std::string_view::npos && lv != std::string_view::npos) {
                    const auto comma = body.find(',', cc);
                    const auto count = parse_u64(body.substr(cc + 12, comma - cc - 12));
                    const auto levels = parse_u64(body.substr(lv + 7));
                    if (!count || !levels || *count == 0 || *levels < 1 || *levels > 3) {
                        fail("malformed feature cache comment");
                    }
                    table.class_count = static_cast<int>(*count);
                    table.levels = static_cast<int>(*levels);
                    levels_known = true;
                }
                continue;
            }
            const auto fields = split_csv(view);
            if (fields.size() < 5 || fields.front() != "frame_id" || fields[fields.size() - 3] != "speed_kmh" ||
                fields[fields.size() - 2] != "scenario" || fields.back() != "split") {
                fail("unexpected feature cache header");
            }
            dimension = fields.size() - 4;
            if (!levels_known) {
                // Fall back to the largest pyramid that divides the width.
                for (int levels = kMaxPyramidLevels; levels >= 1; --levels) {
                    if (dimension % pyramid_cell_count(levels) == 0) {
                        table.levels = levels;
                        table.class_count = static_cast<int>(dimension / pyramid_cell_count(levels));
                        break;
                    }
                }
            }
            if (descriptor_length(table.class_count, table.levels) != dimension) {
                fail("feature width does not match class_count/levels");
            }
            table.features = Matrix(0, dimension);
            header_seen = true;
            continue;
        }
        const auto fields = split_csv(view);
        if (fields.size() != dimension + 4) fail("wrong field count");
        table.frame_ids.emplace_back(trim(fields[0]));
        std::vector<double> row(dimension);
        for (std::size_t j = 0; j < dimension; ++j) {
            const auto value = parse_double(fields[j + 1]);
            if (!value) fail("malformed feature value");
            row[j] = *value;
        }
        table.features.push_row(row);
        const auto speed = parse_double(fields[dimension + 1]);
        const auto scenario = parse_scenario(fields[dimension + 2]);
        const auto split = parse_split(fields[dimension + 3]);
        if (!speed || *speed < 0.0) fail("malformed speed");
        if (!scenario) fail("unknown scenario");
        if (!split) fail("unknown split");
        table.speeds.push_back(*speed);
        table.scenarios.push_back(*scenario);
        table.splits.push_back(*split);
    }
    if (!header_seen) throw DataError(path.string() + ": empty feature cache");
    return table;
}

}  // namespace isa2
