#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "isa2/features.hpp"
#include "isa2/matrix.hpp"

namespace isa2 {

enum class SolverKind { Ols, Lasso, Svr, Boosting, Mlp };

std::string_view to_string(SolverKind kind);
std::optional<SolverKind> parse_solver(std::string_view text);

/// Method label as it appears in report tables, e.g. "SS + Lasso regression".
std::string method_name(SolverKind kind);

// ---------------------------------------------------------------------------
// Hyperparameters

struct OlsParams {
    double ridge_lambda = 0.0;
};

struct LassoParams {
    double lambda = 0.1;
    double tolerance = 1e-7;
    int max_sweeps = 10000;
};

struct SvrParams {
    double cost = 1.0;
    double epsilon = 0.1;
    int epochs = 50;
    /// Step size is 1 / (lambda * (t + step_offset * N)) with lambda = 1 / (C N).
    double step_offset = 10.0;
};

struct BoostingParams {
    int tree_count = 100;
    int max_depth = 3;
    double shrinkage = 0.1;
};

/// Defaults follow the fine-tuning recipe: 4000 iterations, learning rate
/// 1e-4 for the first 2000 and 1e-5 after, momentum 0.9, batches of 20.
struct MlpParams {
    int hidden = 32;
    int iterations = 4000;
    int lr_switch_iteration = 2000;
    double lr_initial = 1e-4;
    double lr_final = 1e-5;
    double momentum = 0.9;
    int batch_size = 20;
};

struct TrainConfig {
    SolverKind kind = SolverKind::Ols;
    OlsParams ols;
    LassoParams lasso;
    SvrParams svr;
    BoostingParams boosting;
    MlpParams mlp;
    std::uint64_t seed = 0;
};

/// Throws std::invalid_argument on out-of-range hyperparameters for `config.kind`.
void validate(const TrainConfig& config);

/// Stable "key=value;..." rendering of the hyperparameters relevant to the
/// solver. Feeds the report's config digest.
std::string describe(const TrainConfig& config);

// ---------------------------------------------------------------------------
// Models

enum class LinearKind : std::uint8_t { Ols = 0, Ridge = 1, Lasso = 2, Svr = 3 };

struct LinearModel {
    LinearKind kind = LinearKind::Ols;
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<double> hyperparameters;  // kind-specific, see fit_*
    bool converged = true;                // lasso only; others always true
    int iterations = 0;                   // sweeps (lasso) or epochs (svr)

    friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // x[feature] <= threshold goes left
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf output

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double evaluate(std::span<const double> x) const;
    friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct BoostedModel {
    std::vector<RegressionTree> trees;
    double shrinkage = 1.0;
    double base_prediction = 0.0;
    int max_depth = 1;
    int tree_count = 0;
    std::size_t dimension = 0;

    friend bool operator==(const BoostedModel&, const BoostedModel&) = default;
};

/// D -> hidden (ReLU) -> 1 (identity).
struct MlpModel {
    std::size_t input_dim = 0;
    std::size_t hidden = 0;
    std::vector<double> w1;  // hidden x input_dim, row-major
    std::vector<double> b1;  // hidden
    std::vector<double> w2;  // hidden
    double b2 = 0.0;
    std::vector<double> loss_curve;  // mini-batch loss per iteration

    std::size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + 1; }
    friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

using Model = std::variant<LinearModel, BoostedModel, MlpModel>;

std::size_t input_dimension(const Model& model);

/// Unclamped forward evaluation.
double raw_output(const Model& model, std::span<const double> x);

/// Predicted speed in km/h, clamped below at 0. Throws on dimension mismatch.
double predict(const Model& model, std::span<const double> x);

std::vector<double> predict_rows(const Model& model, const Matrix& x);

/// Size measure for tie-breaking: nonzero weights (linear), trees (boosted),
/// parameters (MLP).
std::size_t complexity(const Model& model);

// ---------------------------------------------------------------------------
// Solvers. All operate on the matrix they are given; standardization is the
// caller's business (see fit_model).

/// Minimizes sum (y - w.x - b)^2 + lambda |w|^2, bias unpenalized, via the
/// centred normal equations and Cholesky. lambda = 0 on a rank-deficient
/// design throws NumericalError ("singular; supply ridge lambda").
LinearModel fit_ols(const Matrix& x, std::span<const double> y, double ridge_lambda);

/// Soft-thresholding operator S(z, g) = sign(z) max(|z| - g, 0).
double soft_threshold(double z, double gamma);

/// Minimizes (1/2N) sum (y - w.x - b)^2 + lambda |w|_1 by cyclic coordinate
/// descent. Columns must be standardized (mean 0, variance 1 or constant 0);
/// throws std::invalid_argument otherwise. Non-convergence sets converged=false.
LinearModel fit_lasso(const Matrix& x, std::span<const double> y, const LassoParams& params);

/// Smallest lambda at which the lasso solution is identically zero:
/// max_j |(1/N) x_j . (y - mean(y))|.
double lasso_lambda_max(const Matrix& x, std::span<const double> y);

/// Minimizes (1/2)|w|^2 + C sum max(0, |y - w.x - b| - eps) by averaged
/// stochastic subgradient descent over seed-fixed shuffles.
LinearModel fit_svr(const Matrix& x, std::span<const double> y, const SvrParams& params, std::uint64_t seed);

double svr_objective(const LinearModel& model, const Matrix& x, std::span<const double> y, double cost,
                     double epsilon);

/// Least-squares gradient boosting with exact greedy depth-limited trees.
BoostedModel fit_boosting(const Matrix& x, std::span<const double> y, const BoostingParams& params);

/// Mean squared error of the boosted model after each tree (index 0 is the
/// base prediction alone).
std::vector<double> boosting_training_curve(const BoostedModel& model, const Matrix& x, std::span<const double> y);

/// Mini-batch SGD with momentum on the loss (1/2B) sum (f(x) - y)^2.
/// Throws NumericalError naming the iteration if the loss stops being finite.
MlpModel fit_mlp(const Matrix& x, std::span<const double> y, const MlpParams& params, std::uint64_t seed);

/// He-style random initialization with the output bias at mean(y).
MlpModel init_mlp(std::size_t input_dim, std::size_t hidden, double output_bias, std::uint64_t seed);

struct MlpGradient {
    double loss = 0.0;
    std::vector<double> w1, b1, w2;
    double b2 = 0.0;
};

/// Loss (1/2N) sum (f(x_i) - y_i)^2 over `x` and its analytic gradient.
MlpGradient mlp_loss_gradient(const MlpModel& model, const Matrix& x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Standardization folding

/// Linear model on raw inputs equivalent to `model` applied to standardized inputs.
LinearModel destandardize(const LinearModel& model, const Standardization& s);
MlpModel destandardize(const MlpModel& model, const Standardization& s);

/// Full fit for one solver: standardizes (except for boosting), fits, and folds
/// the standardization back so the returned model consumes raw descriptors.
Model fit_model(const Matrix& x, std::span<const double> y, const TrainConfig& config);

}  // namespace isa2
