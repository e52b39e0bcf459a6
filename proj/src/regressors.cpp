#include "isa2/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <boost/random/uniform_int_distribution.hpp>

#include "isa2/error.hpp"
#include "isa2/text.hpp"

namespace isa2 {

std::string_view to_string(SolverKind kind) {
    switch (kind) {
        case SolverKind::Ols: return "ols";
        case SolverKind::Lasso: return "lasso";
        case SolverKind::Svr: return "svr";
        case SolverKind::Boosting: return "boosting";
        case SolverKind::Mlp: return "mlp";
    }
    return "unknown";
}

std::optional<SolverKind> parse_solver(std::string_view text) {
    text = trim(text);
    for (const auto kind : {SolverKind::Ols, SolverKind::Lasso, SolverKind::Svr, SolverKind::Boosting, SolverKind::Mlp}) {
        if (text == to_string(kind)) return kind;
    }
    if (text == "linear") return SolverKind::Ols;
    return std::nullopt;
}

std::string method_name(SolverKind kind) {
    switch (kind) {
        case SolverKind::Ols: return "SS + Linear regression";
        case SolverKind::Lasso: return "SS + Lasso regression";
        case SolverKind::Svr: return "SS + SVR";
        case SolverKind::Boosting: return "SS + Boosting Trees";
        case SolverKind::Mlp: return "SS + MLP";
    }
    return "unknown";
}

void validate(const TrainConfig& config) {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(what);
    };
    switch (config.kind) {
        case SolverKind::Ols:
            require(config.ols.ridge_lambda >= 0.0 && std::isfinite(config.ols.ridge_lambda), "ridge lambda must be >= 0");
            break;
        case SolverKind::Lasso:
            require(config.lasso.lambda > 0.0 && std::isfinite(config.lasso.lambda), "lasso lambda must be > 0");
            require(config.lasso.tolerance > 0.0, "lasso tolerance must be > 0");
            require(config.lasso.max_sweeps >= 1, "lasso max_sweeps must be >= 1");
            break;
        case SolverKind::Svr:
            require(config.svr.cost > 0.0 && std::isfinite(config.svr.cost), "SVR cost must be > 0");
            require(config.svr.epsilon >= 0.0 && std::isfinite(config.svr.epsilon), "SVR epsilon must be >= 0");
            require(config.svr.epochs >= 1, "SVR epochs must be >= 1");
            require(config.svr.step_offset > 0.0, "SVR step offset must be > 0");
            break;
        case SolverKind::Boosting:
            require(config.boosting.tree_count >= 1, "boosting tree_count must be >= 1");
            require(config.boosting.max_depth >= 1, "boosting max_depth must be >= 1");
            require(config.boosting.shrinkage > 0.0 && config.boosting.shrinkage <= 1.0,
                    "boosting shrinkage must be in (0, 1]");
            break;
        case SolverKind::Mlp:
            require(config.mlp.hidden >= 1, "MLP hidden width must be >= 1");
            require(config.mlp.iterations >= 1, "MLP iterations must be >= 1");
            require(config.mlp.batch_size >= 1, "MLP batch size must be >= 1");
            require(config.mlp.lr_initial > 0.0 && config.mlp.lr_final > 0.0, "MLP learning rates must be > 0");
            require(config.mlp.momentum >= 0.0 && config.mlp.momentum < 1.0, "MLP momentum must be in [0, 1)");
            break;
    }
}

std::string describe(const TrainConfig& config) {
    std::ostringstream out;
    out << "solver=" << to_string(config.kind);
    switch (config.kind) {
        case SolverKind::Ols:
            out << ";ridge_lambda=" << format_double(config.ols.ridge_lambda);
            break;
        case SolverKind::Lasso:
            out << ";lambda=" << format_double(config.lasso.lambda) << ";tolerance=" << format_double(config.lasso.tolerance)
                << ";max_sweeps=" << config.lasso.max_sweeps;
            break;
        case SolverKind::Svr:
            out << ";cost=" << format_double(config.svr.cost) << ";epsilon=" << format_double(config.svr.epsilon)
                << ";epochs=" << config.svr.epochs << ";step_offset=" << format_double(config.svr.step_offset)
                << ";seed=" << config.seed;
            break;
        case SolverKind::Boosting:
            out << ";tree_count=" << config.boosting.tree_count << ";max_depth=" << config.boosting.max_depth
                << ";shrinkage=" << format_double(config.boosting.shrinkage);
            break;
        case SolverKind::Mlp:
            out << ";hidden=" << config.mlp.hidden << ";iterations=" << config.mlp.iterations
                << ";lr_switch=" << config.mlp.lr_switch_iteration << ";lr_initial=" << format_double(config.mlp.lr_initial)
                << ";lr_final=" << format_double(config.mlp.lr_final) << ";momentum=" << format_double(config.mlp.momentum)
                << ";batch_size=" << config.mlp.batch_size << ";seed=" << config.seed;
            break;
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Evaluation

double RegressionTree::evaluate(std::span<const double> x) const {
    std::size_t node = 0;
    while (!nodes[node].is_leaf()) {
        const auto& n = nodes[node];
        node = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[node].value;
}

namespace {

double mlp_forward(const MlpModel& m, std::span<const double> x) {
    double out = m.b2;
    for (std::size_t k = 0; k < m.hidden; ++k) {
        const double pre = m.b1[k] + dot({m.w1.data() + k * m.input_dim, m.input_dim}, x);
        if (pre > 0.0) out += m.w2[k] * pre;
    }
    return out;
}

}  // namespace

std::size_t input_dimension(const Model& model) {
    return std::visit(
        [](const auto& m) -> std::size_t {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LinearModel>) return m.weights.size();
            else if constexpr (std::is_same_v<T, BoostedModel>) return m.dimension;
            else return m.input_dim;
        },
        model);
}

double raw_output(const Model& model, std::span<const double> x) {
    if (x.size() != input_dimension(model)) {
        throw std::invalid_argument("predict: descriptor has " + std::to_string(x.size()) + " entries, model expects " +
                                    std::to_string(input_dimension(model)));
    }
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LinearModel>) {
                return m.bias + dot(m.weights, x);
            } else if constexpr (std::is_same_v<T, BoostedModel>) {
                double sum = 0.0;
                for (const auto& tree : m.trees) sum += tree.evaluate(x);
                return m.base_prediction + m.shrinkage * sum;
            } else {
                return mlp_forward(m, x);
            }
        },
        model);
}

double predict(const Model& model, std::span<const double> x) { return std::max(0.0, raw_output(model, x)); }

std::vector<double> predict_rows(const Model& model, const Matrix& x) {
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict(model, x.row(i));
    return out;
}

std::size_t complexity(const Model& model) {
    return std::visit(
        [](const auto& m) -> std::size_t {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LinearModel>) {
                return static_cast<std::size_t>(
                    std::count_if(m.weights.begin(), m.weights.end(), [](double w) { return w != 0.0; }));
            } else if constexpr (std::is_same_v<T, BoostedModel>) {
                return m.trees.size();
            } else {
                return m.parameter_count();
            }
        },
        model);
}

// ---------------------------------------------------------------------------
// OLS / ridge

LinearModel fit_ols(const Matrix& x, std::span<const double> y, double ridge_lambda) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    if (n == 0 || y.size() != n) throw std::invalid_argument("fit_ols: need N >= 1 rows matching y");
    if (!(ridge_lambda >= 0.0)) throw std::invalid_argument("fit_ols: ridge lambda must be >= 0");

    std::vector<double> x_mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        for (std::size_t j = 0; j < d; ++j) x_mean[j] += row[j];
    }
    for (auto& m : x_mean) m /= static_cast<double>(n);
    const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

    // Centred normal equations: the bias drops out and is recovered afterwards.
    Matrix gram(d, d);
    std::vector<double> rhs(d, 0.0);
    std::vector<double> centred(d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        for (std::size_t j = 0; j < d; ++j) centred[j] = row[j] - x_mean[j];
        const double yc = y[i] - y_mean;
        for (std::size_t j = 0; j < d; ++j) {
            const double cj = centred[j];
            if (cj == 0.0) continue;
            rhs[j] += cj * yc;
            for (std::size_t k = 0; k <= j; ++k) gram(j, k) += cj * centred[k];
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        gram(j, j) += ridge_lambda;
        for (std::size_t k = 0; k < j; ++k) gram(k, j) = gram(j, k);
    }

    LinearModel model;
    model.kind = ridge_lambda > 0.0 ? LinearKind::Ridge : LinearKind::Ols;
    model.hyperparameters = {ridge_lambda};
    try {
        model.weights = d == 0 ? std::vector<double>{} : cholesky_solve(gram, rhs);
    } catch (const NumericalError& e) {
        if (ridge_lambda == 0.0) {
            throw NumericalError(std::string("fit_ols: normal equations singular; supply ridge lambda > 0 (") +
                                 e.what() + ")");
        }
        throw NumericalError(std::string("fit_ols: normal equations ill-conditioned at ridge lambda ") +
                             format_double(ridge_lambda) + " (" + e.what() + ")");
    }
    model.bias = y_mean - dot(model.weights, x_mean);
    return model;
}

// ---------------------------------------------------------------------------
// Lasso

double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

double lasso_lambda_max(const Matrix& x, std::span<const double> y) {
    const std::size_t n = x.rows();
    const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    std::vector<double> corr(x.cols(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) corr[j] += row[j] * (y[i] - y_mean);
    }
    double best = 0.0;
    for (const double c : corr) best = std::max(best, std::abs(c) / static_cast<double>(n));
    return best;
}

LinearModel fit_lasso(const Matrix& x, std::span<const double> y, const LassoParams& params) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    if (n == 0 || y.size() != n) throw std::invalid_argument("fit_lasso: need N >= 1 rows matching y");
    if (!(params.lambda > 0.0)) throw std::invalid_argument("fit_lasso: lambda must be > 0");
    const double inv_n = 1.0 / static_cast<double>(n);

    // Column scale (1/N) x_j . x_j, doubling as the standardization check.
    std::vector<double> col_sq(d, 0.0);
    std::vector<double> col_mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            col_sq[j] += row[j] * row[j];
            col_mean[j] += row[j];
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        col_sq[j] *= inv_n;
        col_mean[j] *= inv_n;
        const bool centred = std::abs(col_mean[j]) <= 1e-8;
        const bool unit = std::abs(col_sq[j] - 1.0) <= 1e-6 || col_sq[j] == 0.0;
        if (!centred || !unit) {
            throw std::invalid_argument("fit_lasso: column " + std::to_string(j) +
                                        " is not standardized (mean " + format_double(col_mean[j]) +
                                        ", mean square " + format_double(col_sq[j]) + ")");
        }
    }

    LinearModel model;
    model.kind = LinearKind::Lasso;
    model.hyperparameters = {params.lambda, params.tolerance, static_cast<double>(params.max_sweeps)};
    model.weights.assign(d, 0.0);
    model.bias = std::accumulate(y.begin(), y.end(), 0.0) * inv_n;
    std::vector<double> residual(n);
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - model.bias;

    // Column-major copy keeps the inner loops contiguous.
    std::vector<double> columns(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        for (std::size_t j = 0; j < d; ++j) columns[j * n + i] = row[j];
    }

    model.converged = false;
    for (int sweep = 1; sweep <= params.max_sweeps; ++sweep) {
        double max_delta = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            if (col_sq[j] == 0.0) continue;
            const double* col = columns.data() + j * n;
            double z = 0.0;
            for (std::size_t i = 0; i < n; ++i) z += col[i] * residual[i];
            z = z * inv_n + col_sq[j] * model.weights[j];
            const double updated = soft_threshold(z, params.lambda) / col_sq[j];
            const double delta = updated - model.weights[j];
            if (delta != 0.0) {
                for (std::size_t i = 0; i < n; ++i) residual[i] -= delta * col[i];
                model.weights[j] = updated;
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        // Unpenalized bias: absorb the mean residual.
        const double shift = std::accumulate(residual.begin(), residual.end(), 0.0) * inv_n;
        model.bias += shift;
        for (auto& r : residual) r -= shift;

        model.iterations = sweep;
        if (max_delta < params.tolerance) {
            model.converged = true;
            break;
        }
    }
    return model;
}

// ---------------------------------------------------------------------------
// Linear SVR

double svr_objective(const LinearModel& model, const Matrix& x, std::span<const double> y, double cost,
                     double epsilon) {
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double r = y[i] - model.bias - dot(model.weights, x.row(i));
        loss += std::max(0.0, std::abs(r) - epsilon);
    }
    return 0.5 * dot(model.weights, model.weights) + cost * loss;
}

namespace {

// For fixed w the tube loss is piecewise linear in b with slope
// #(breakpoints below b) - N over the 2N breakpoints r_i -+ eps, so any b
// between the N-th and (N+1)-th breakpoint is optimal. Take the midpoint.
double svr_best_bias(const Matrix& x, std::span<const double> y, std::span<const double> w, double epsilon) {
    const std::size_t n = x.rows();
    std::vector<double> breaks;
    breaks.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - dot(w, x.row(i));
        breaks.push_back(r - epsilon);
        breaks.push_back(r + epsilon);
    }
    const auto mid = breaks.begin() + static_cast<std::ptrdiff_t>(n);
    std::nth_element(breaks.begin(), mid, breaks.end());
    const double upper = *mid;
    const double lower = *std::max_element(breaks.begin(), mid);
    return 0.5 * (lower + upper);
}

}  // namespace

LinearModel fit_svr(const Matrix& x, std::span<const double> y, const SvrParams& params, std::uint64_t seed) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    if (n == 0 || y.size() != n) throw std::invalid_argument("fit_svr: need N >= 1 rows matching y");
    if (!(params.cost > 0.0) || !(params.epsilon >= 0.0) || params.epochs < 1) {
        throw std::invalid_argument("fit_svr: invalid hyperparameters");
    }

    // Per-sample objective (lambda/2)|w|^2 + loss_i with lambda = 1/(C N) is
    // the full objective divided by C N.
    const double lambda = 1.0 / (params.cost * static_cast<double>(n));
    const double t0 = params.step_offset * static_cast<double>(n);
    const std::size_t total_steps = static_cast<std::size_t>(params.epochs) * n;
    const std::size_t average_from = total_steps / 2;

    std::vector<double> sorted(y.begin(), y.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2), sorted.end());
    double b = sorted[n / 2];
    std::vector<double> w(d, 0.0);
    std::vector<double> w_avg(d, 0.0);
    double b_avg = 0.0;
    std::size_t averaged = 0;

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t t = 0;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) {
            boost::random::uniform_int_distribution<std::size_t> pick(0, i - 1);
            std::swap(order[i - 1], order[pick(rng)]);
        }
        for (const std::size_t i : order) {
            ++t;
            const double eta = 1.0 / (lambda * (static_cast<double>(t) + t0));
            const auto row = x.row(i);
            const double r = y[i] - b - dot(w, row);
            const double g = r > params.epsilon ? -1.0 : (r < -params.epsilon ? 1.0 : 0.0);
            const double shrink = 1.0 - eta * lambda;
            for (std::size_t j = 0; j < d; ++j) w[j] = shrink * w[j] - eta * g * row[j];
            b -= eta * g;
            if (t > average_from) {
                ++averaged;
                const double a = 1.0 / static_cast<double>(averaged);
                for (std::size_t j = 0; j < d; ++j) w_avg[j] += (w[j] - w_avg[j]) * a;
                b_avg += (b - b_avg) * a;
            }
        }
    }

    LinearModel model;
    model.kind = LinearKind::Svr;
    model.hyperparameters = {params.cost, params.epsilon, static_cast<double>(params.epochs), params.step_offset};
    model.iterations = params.epochs;
    model.weights = std::move(w_avg);
    model.bias = svr_best_bias(x, y, model.weights, params.epsilon);
    (void)b_avg;

    // Never return something worse than the best constant model.
    LinearModel constant = model;
    constant.weights.assign(d, 0.0);
    constant.bias = svr_best_bias(x, y, constant.weights, params.epsilon);
    if (svr_objective(constant, x, y, params.cost, params.epsilon) <
        svr_objective(model, x, y, params.cost, params.epsilon)) {
        model.weights = std::move(constant.weights);
        model.bias = constant.bias;
    }
    return model;
}

// ---------------------------------------------------------------------------
// Standardization folding

LinearModel destandardize(const LinearModel& model, const Standardization& s) {
    if (model.weights.size() != s.dimension()) throw std::invalid_argument("destandardize: dimension mismatch");
    LinearModel raw = model;
    raw.bias = model.bias;
    for (std::size_t j = 0; j < s.dimension(); ++j) {
        raw.weights[j] = s.degenerate[j] ? 0.0 : model.weights[j] / s.scale[j];
        raw.bias -= raw.weights[j] * s.mean[j];
    }
    return raw;
}

MlpModel destandardize(const MlpModel& model, const Standardization& s) {
    if (model.input_dim != s.dimension()) throw std::invalid_argument("destandardize: dimension mismatch");
    MlpModel raw = model;
    for (std::size_t k = 0; k < model.hidden; ++k) {
        for (std::size_t j = 0; j < model.input_dim; ++j) {
            const std::size_t idx = k * model.input_dim + j;
            raw.w1[idx] = s.degenerate[j] ? 0.0 : model.w1[idx] / s.scale[j];
            raw.b1[k] -= raw.w1[idx] * s.mean[j];
        }
    }
    return raw;
}

Model fit_model(const Matrix& x, std::span<const double> y, const TrainConfig& config) {
    validate(config);
    if (config.kind == SolverKind::Boosting) return fit_boosting(x, y, config.boosting);

    const Standardization s = fit_standardization(x);
    const Matrix z = apply_standardization(x, s);
    switch (config.kind) {
        case SolverKind::Ols: return destandardize(fit_ols(z, y, config.ols.ridge_lambda), s);
        case SolverKind::Lasso: return destandardize(fit_lasso(z, y, config.lasso), s);
        case SolverKind::Svr: return destandardize(fit_svr(z, y, config.svr, config.seed), s);
        case SolverKind::Mlp: return destandardize(fit_mlp(z, y, config.mlp, config.seed), s);
        case SolverKind::Boosting: break;
    }
    throw std::logic_error("fit_model: unhandled solver");
}

}  // namespace isa2
