#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "isa2/error.hpp"
#include "isa2/regressors.hpp"

namespace isa2 {

MlpModel init_mlp(std::size_t input_dim, std::size_t hidden, double output_bias, std::uint64_t seed) {
    MlpModel model;
    model.input_dim = input_dim;
    model.hidden = hidden;
    model.w1.resize(hidden * input_dim);
    model.b1.assign(hidden, 0.0);
    model.w2.resize(hidden);
    model.b2 = output_bias;

    std::mt19937_64 rng(seed);
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    const double in_scale = std::sqrt(2.0 / static_cast<double>(std::max<std::size_t>(input_dim, 1)));
    const double out_scale = std::sqrt(1.0 / static_cast<double>(std::max<std::size_t>(hidden, 1)));
    for (auto& w : model.w1) w = in_scale * normal(rng);
    for (auto& w : model.w2) w = out_scale * normal(rng);
    return model;
}

namespace {

// Accumulates the gradient of (1/2B) sum (f(x_i) - y_i)^2 over `rows` into g
// (which must be zeroed and sized) and returns the loss.
double accumulate_gradient(const MlpModel& m, const Matrix& x, std::span<const double> y,
                           std::span<const std::size_t> rows, MlpGradient& g) {
    const double inv_b = 1.0 / static_cast<double>(rows.size());
    std::vector<double> pre(m.hidden);
    double loss = 0.0;
    for (const std::size_t i : rows) {
        const auto xi = x.row(i);
        double out = m.b2;
        for (std::size_t k = 0; k < m.hidden; ++k) {
            pre[k] = m.b1[k] + dot({m.w1.data() + k * m.input_dim, m.input_dim}, xi);
            if (pre[k] > 0.0) out += m.w2[k] * pre[k];
        }
        const double err = out - y[i];
        loss += 0.5 * err * err * inv_b;
        const double d_out = err * inv_b;
        g.b2 += d_out;
        for (std::size_t k = 0; k < m.hidden; ++k) {
            if (!(pre[k] > 0.0)) continue;
            g.w2[k] += d_out * pre[k];
            const double d_pre = d_out * m.w2[k];
            g.b1[k] += d_pre;
            double* gw = g.w1.data() + k * m.input_dim;
            for (std::size_t j = 0; j < m.input_dim; ++j) gw[j] += d_pre * xi[j];
        }
    }
    g.loss = loss;
    return loss;
}

MlpGradient zero_gradient(const MlpModel& m) {
    MlpGradient g;
    g.w1.assign(m.w1.size(), 0.0);
    g.b1.assign(m.b1.size(), 0.0);
    g.w2.assign(m.w2.size(), 0.0);
    return g;
}

}  // namespace

MlpGradient mlp_loss_gradient(const MlpModel& model, const Matrix& x, std::span<const double> y) {
    if (x.rows() == 0 || x.rows() != y.size() || x.cols() != model.input_dim) {
        throw std::invalid_argument("mlp_loss_gradient: shape mismatch");
    }
    std::vector<std::size_t> rows(x.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    MlpGradient g = zero_gradient(model);
    accumulate_gradient(model, x, y, rows, g);
    return g;
}

MlpModel fit_mlp(const Matrix& x, std::span<const double> y, const MlpParams& params, std::uint64_t seed) {
    const std::size_t n = x.rows();
    if (n == 0 || y.size() != n) throw std::invalid_argument("fit_mlp: need N >= 1 rows matching y");
    if (params.hidden < 1 || params.iterations < 1 || params.batch_size < 1) {
        throw std::invalid_argument("fit_mlp: invalid hyperparameters");
    }
    const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    MlpModel model = init_mlp(x.cols(), static_cast<std::size_t>(params.hidden), y_mean, seed);

    MlpGradient velocity = zero_gradient(model);
    // Batch order comes from a stream independent of the initialization.
    std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ULL);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t cursor = n;  // forces a shuffle before the first batch
    std::vector<std::size_t> batch(static_cast<std::size_t>(params.batch_size));

    model.loss_curve.reserve(static_cast<std::size_t>(params.iterations));
    for (int iter = 0; iter < params.iterations; ++iter) {
        // Batches wrap across epoch boundaries.
        for (auto& slot : batch) {
            if (cursor == n) {
                for (std::size_t i = n; i > 1; --i) {
                    boost::random::uniform_int_distribution<std::size_t> pick(0, i - 1);
                    std::swap(order[i - 1], order[pick(rng)]);
                }
                cursor = 0;
            }
            slot = order[cursor++];
        }

        MlpGradient g = zero_gradient(model);
        const double loss = accumulate_gradient(model, x, y, batch, g);
        if (!std::isfinite(loss)) {
            throw NumericalError("MLP training diverged at iteration " + std::to_string(iter) +
                                 " (loss is not finite)");
        }
        model.loss_curve.push_back(loss);

        const double lr = iter < params.lr_switch_iteration ? params.lr_initial : params.lr_final;
        auto step = [&](std::vector<double>& theta, std::vector<double>& v, const std::vector<double>& grad) {
            for (std::size_t k = 0; k < theta.size(); ++k) {
                v[k] = params.momentum * v[k] - lr * grad[k];
                theta[k] += v[k];
            }
        };
        step(model.w1, velocity.w1, g.w1);
        step(model.b1, velocity.b1, g.b1);
        step(model.w2, velocity.w2, g.w2);
        velocity.b2 = params.momentum * velocity.b2 - lr * g.b2;
        model.b2 += velocity.b2;
    }

    const auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
    };
    if (!finite(model.w1) || !finite(model.b1) || !finite(model.w2) || !std::isfinite(model.b2)) {
        throw NumericalError("MLP training diverged at iteration " + std::to_string(params.iterations) +
                             " (parameters are not finite)");
    }
    return model;
}

}  // namespace isa2
