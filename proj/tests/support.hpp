#pragma once

// Fixtures and brute-force oracles shared by the unit tests and the acceptance
// binary. Oracles deliberately avoid the library's own helpers.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "isa2/fusion.hpp"
#include "isa2/label_map.hpp"
#include "isa2/matrix.hpp"
#include "isa2/regressors.hpp"

namespace isa2::testing {

class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("isa2_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << bytes;
}

/// Random label map with roughly `void_rate` void pixels.
inline LabelMap random_label_map(int h, int w, int class_count, double void_rate, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> cls(0, class_count - 1);
    LabelMap map(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            map.at(r, c) = u(rng) < void_rate ? kVoidLabel : static_cast<std::uint8_t>(cls(rng));
        }
    }
    return map;
}

/// Per-cell class fractions by direct pixel enumeration, same layout as the
/// descriptor: level, then row-major cell, then class.
inline std::vector<double> brute_descriptor(const LabelMap& map, int levels, int class_count) {
    std::vector<double> out;
    const int h = map.height();
    const int w = map.width();
    for (int l = 0; l < levels; ++l) {
        const int n = 1 << l;
        for (int gr = 0; gr < n; ++gr) {
            for (int gc = 0; gc < n; ++gc) {
                std::vector<long> counts(static_cast<std::size_t>(class_count), 0);
                long valid = 0;
                for (int r = 0; r < h; ++r) {
                    if (!(r >= gr * h / n && r < (gr + 1) * h / n)) continue;
                    for (int c = 0; c < w; ++c) {
                        if (!(c >= gc * w / n && c < (gc + 1) * w / n)) continue;
                        const int v = map.at(r, c);
                        if (v == kVoidLabel) continue;
                        ++counts[static_cast<std::size_t>(v)];
                        ++valid;
                    }
                }
                for (int k = 0; k < class_count; ++k) {
                    out.push_back(valid ? static_cast<double>(counts[static_cast<std::size_t>(k)]) / static_cast<double>(valid)
                                        : 0.0);
                }
            }
        }
    }
    return out;
}

/// Random score-map set over the given scales at a reference size.
inline ScoreMapSet random_score_map_set(int ref_h, int ref_w, int class_count, const std::vector<double>& scales,
                                        std::mt19937_64& rng, bool coarse_ties = false) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::uniform_int_distribution<int> level(0, 3);
    ScoreMapSet set;
    set.reference_height = ref_h;
    set.reference_width = ref_w;
    for (const double s : scales) {
        const int h = static_cast<int>(std::floor(s * ref_h + 0.5));
        const int w = static_cast<int>(std::floor(s * ref_w + 0.5));
        ScoreMap map(h, w, class_count);
        // Quantized scores make exact ties common.
        for (auto& v : map.scores()) v = coarse_ties ? static_cast<float>(level(rng)) * 0.25f : u(rng);
        set.entries.push_back({s, std::move(map)});
    }
    return set;
}

/// Per-pixel, per-class maximum over nearest-upsampled entries, then argmax with
/// the lowest class id winning ties.
inline LabelMap brute_fused_labels(const ScoreMapSet& set, std::vector<float>* fused_out = nullptr) {
    const int H = set.reference_height;
    const int W = set.reference_width;
    const int C = set.entries.front().map.class_count();
    LabelMap labels(H, W);
    if (fused_out) fused_out->assign(static_cast<std::size_t>(H) * W * C, 0.0f);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            std::vector<float> best(static_cast<std::size_t>(C), -INFINITY);
            for (const auto& e : set.entries) {
                const int sy = static_cast<int>(static_cast<long>(y) * e.map.height() / H);
                const int sx = static_cast<int>(static_cast<long>(x) * e.map.width() / W);
                for (int c = 0; c < C; ++c) best[static_cast<std::size_t>(c)] = std::max(best[static_cast<std::size_t>(c)], e.map(sy, sx, c));
            }
            int arg = 0;
            for (int c = 1; c < C; ++c) {
                if (best[static_cast<std::size_t>(c)] > best[static_cast<std::size_t>(arg)]) arg = c;
            }
            labels.at(y, x) = static_cast<std::uint8_t>(arg);
            if (fused_out) {
                std::copy(best.begin(), best.end(),
                          fused_out->begin() + (static_cast<std::ptrdiff_t>(y) * W + x) * C);
            }
        }
    }
    return labels;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double sd = 1.0) {
    std::normal_distribution<double> n(0.0, sd);
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = n(rng);
    }
    return m;
}

/// y = x.w + b + noise.
inline std::vector<double> linear_targets(const Matrix& x, const std::vector<double>& w, double b, double noise,
                                          std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> y;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double v = b;
        for (std::size_t c = 0; c < x.cols(); ++c) v += x(r, c) * w[c];
        y.push_back(v + noise * n(rng));
    }
    return y;
}

/// Gradient norm of sum (y - w.x - b)^2 + lambda |w|^2 at (w, b).
inline double ols_stationarity(const Matrix& x, const std::vector<double>& y, const LinearModel& m, double lambda) {
    std::vector<double> g(x.cols() + 1, 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double pred = m.bias;
        for (std::size_t c = 0; c < x.cols(); ++c) pred += m.weights[c] * x(r, c);
        const double res = y[r] - pred;
        for (std::size_t c = 0; c < x.cols(); ++c) g[c] += -2.0 * res * x(r, c);
        g.back() += -2.0 * res;
    }
    for (std::size_t c = 0; c < x.cols(); ++c) g[c] += 2.0 * lambda * m.weights[c];
    double s = 0.0;
    for (const double v : g) s += v * v;
    return std::sqrt(s);
}

/// Largest violation of the lasso optimality conditions for
/// (1/2N)|y - Xw - b|^2 + lambda |w|_1.
inline double lasso_kkt_violation(const Matrix& x, const std::vector<double>& y, const LinearModel& m, double lambda) {
    const double n = static_cast<double>(x.rows());
    std::vector<double> res(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double pred = m.bias;
        for (std::size_t c = 0; c < x.cols(); ++c) pred += m.weights[c] * x(r, c);
        res[r] = y[r] - pred;
    }
    double worst = 0.0;
    double bias_grad = 0.0;
    for (const double v : res) bias_grad += v;
    worst = std::abs(bias_grad / n);
    for (std::size_t c = 0; c < x.cols(); ++c) {
        double g = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r) g -= x(r, c) * res[r];
        g /= n;
        const double w = m.weights[c];
        const double violation = w == 0.0 ? std::max(0.0, std::abs(g) - lambda) : std::abs(g + lambda * (w > 0 ? 1.0 : -1.0));
        worst = std::max(worst, violation);
    }
    return worst;
}

/// (1/2) w^2 + C sum max(0, |y - w x - b| - eps) for one feature.
inline double svr_objective_1d(double w, double b, const std::vector<double>& x, const std::vector<double>& y, double cost,
                               double eps) {
    double loss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) loss += std::max(0.0, std::abs(y[i] - w * x[i] - b) - eps);
    return 0.5 * w * w + cost * loss;
}

/// Minimum of the 1-D SVR objective: a fine grid over w and, for each w, an
/// exact search over b (the optimum lies on a tube breakpoint).
inline double svr_brute_force_1d(const std::vector<double>& x, const std::vector<double>& y, double cost, double eps,
                                 double w_lo, double w_hi, int steps) {
    double best = INFINITY;
    for (int k = 0; k <= steps; ++k) {
        const double w = w_lo + (w_hi - w_lo) * k / steps;
        for (std::size_t i = 0; i < x.size(); ++i) {
            for (const double shift : {-eps, eps}) {
                best = std::min(best, svr_objective_1d(w, y[i] - w * x[i] + shift, x, y, cost, eps));
            }
        }
    }
    return best;
}

}  // namespace isa2::testing
