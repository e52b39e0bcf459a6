#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "isa2/regressors.hpp"

namespace isa2 {

namespace {

struct SortedColumn {
    std::vector<double> values;
    std::vector<std::uint32_t> rows;
};

// Per-feature sample order, computed once and shared by every tree.
std::vector<SortedColumn> presort(const Matrix& x) {
    const std::size_t n = x.rows();
    std::vector<SortedColumn> columns(x.cols());
    std::vector<std::uint32_t> order(n);
    for (std::size_t j = 0; j < x.cols(); ++j) {
        std::iota(order.begin(), order.end(), 0u);
        std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, j) < x(b, j); });
        auto& col = columns[j];
        col.rows = order;
        col.values.resize(n);
        for (std::size_t k = 0; k < n; ++k) col.values[k] = x(order[k], j);
    }
    return columns;
}

struct NodeStats {
    double count = 0.0;
    double sum = 0.0;
    double sum_sq = 0.0;
};

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

// Midpoint strictly below `hi` so that lo <= threshold < hi.
double midpoint(double lo, double hi) {
    const double mid = lo + (hi - lo) * 0.5;
    return mid < hi ? mid : lo;
}

// Grows one depth-limited tree on the residuals. On return, leaf_of[i] is the
// node index of the leaf holding sample i.
RegressionTree grow_tree(const Matrix& x, const std::vector<SortedColumn>& columns, std::span<const double> residual,
                         int max_depth, std::vector<int>& leaf_of) {
    const std::size_t n = x.rows();
    RegressionTree tree;
    tree.nodes.push_back(TreeNode{});
    std::fill(leaf_of.begin(), leaf_of.end(), 0);

    std::vector<NodeStats> stats(1);
    for (std::size_t i = 0; i < n; ++i) {
        stats[0].count += 1.0;
        stats[0].sum += residual[i];
        stats[0].sum_sq += residual[i] * residual[i];
    }

    std::vector<int> active = {0};
    for (int depth = 0; depth < max_depth && !active.empty(); ++depth) {
        // slot_of[node] -> position in `active`, or -1.
        std::vector<int> slot_of(tree.nodes.size(), -1);
        for (std::size_t s = 0; s < active.size(); ++s) slot_of[static_cast<std::size_t>(active[s])] = static_cast<int>(s);

        std::vector<SplitCandidate> best(active.size());
        std::vector<double> left_count(active.size());
        std::vector<double> left_sum(active.size());
        std::vector<double> last_value(active.size());

        for (std::size_t j = 0; j < columns.size(); ++j) {
            std::fill(left_count.begin(), left_count.end(), 0.0);
            std::fill(left_sum.begin(), left_sum.end(), 0.0);
            const auto& col = columns[j];
            for (std::size_t k = 0; k < n; ++k) {
                const std::uint32_t row = col.rows[k];
                const int slot = slot_of[static_cast<std::size_t>(leaf_of[row])];
                if (slot < 0) continue;
                const auto s = static_cast<std::size_t>(slot);
                const double v = col.values[k];
                if (left_count[s] > 0.0 && v > last_value[s]) {
                    const auto& total = stats[static_cast<std::size_t>(active[s])];
                    const double right_count = total.count - left_count[s];
                    const double right_sum = total.sum - left_sum[s];
                    const double gain = left_sum[s] * left_sum[s] / left_count[s] +
                                        right_sum * right_sum / right_count - total.sum * total.sum / total.count;
                    if (gain > best[s].gain) {
                        best[s] = {gain, static_cast<int>(j), midpoint(last_value[s], v)};
                    }
                }
                left_count[s] += 1.0;
                left_sum[s] += residual[row];
                last_value[s] = v;
            }
        }

        std::vector<int> next_active;
        std::vector<int> split_slot(tree.nodes.size(), -1);
        for (std::size_t s = 0; s < active.size(); ++s) {
            const int node = active[s];
            const auto& total = stats[static_cast<std::size_t>(node)];
            const double centred_ss = total.sum_sq - total.sum * total.sum / total.count;
            // No meaningful variance reduction: keep the node as a leaf.
            if (best[s].feature < 0 || !(best[s].gain > 1e-12 * std::max(centred_ss, 1e-300)) ||
                best[s].gain <= 1e-15 * std::max(1.0, total.sum_sq)) {
                continue;
            }
            const int left = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(TreeNode{});
            tree.nodes.push_back(TreeNode{});
            stats.emplace_back();
            stats.emplace_back();
            auto& parent = tree.nodes[static_cast<std::size_t>(node)];
            parent.feature = best[s].feature;
            parent.threshold = best[s].threshold;
            parent.left = left;
            parent.right = left + 1;
            split_slot[static_cast<std::size_t>(node)] = left;
            next_active.push_back(left);
            next_active.push_back(left + 1);
        }
        split_slot.resize(tree.nodes.size(), -1);

        for (std::size_t i = 0; i < n; ++i) {
            const int node = leaf_of[i];
            const int left = split_slot[static_cast<std::size_t>(node)];
            if (left < 0) continue;
            const auto& parent = tree.nodes[static_cast<std::size_t>(node)];
            const int child = x(i, static_cast<std::size_t>(parent.feature)) <= parent.threshold ? left : left + 1;
            leaf_of[i] = child;
            auto& st = stats[static_cast<std::size_t>(child)];
            st.count += 1.0;
            st.sum += residual[i];
            st.sum_sq += residual[i] * residual[i];
        }
        // A node with a single sample cannot split further.
        active.clear();
        for (const int node : next_active) {
            if (stats[static_cast<std::size_t>(node)].count >= 2.0) active.push_back(node);
        }
    }

    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
        if (stats[k].count > 0.0) tree.nodes[k].value = stats[k].sum / stats[k].count;
    }
    return tree;
}

}  // namespace

BoostedModel fit_boosting(const Matrix& x, std::span<const double> y, const BoostingParams& params) {
    const std::size_t n = x.rows();
    if (n == 0 || y.size() != n) throw std::invalid_argument("fit_boosting: need N >= 1 rows matching y");
    if (params.tree_count < 1 || params.max_depth < 1 || !(params.shrinkage > 0.0 && params.shrinkage <= 1.0)) {
        throw std::invalid_argument("fit_boosting: invalid hyperparameters");
    }
    if (n > std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument("fit_boosting: too many rows");

    BoostedModel model;
    model.shrinkage = params.shrinkage;
    model.max_depth = params.max_depth;
    model.tree_count = params.tree_count;
    model.dimension = x.cols();
    model.base_prediction = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

    const auto columns = presort(x);
    std::vector<double> prediction(n, model.base_prediction);
    std::vector<double> residual(n);
    std::vector<int> leaf_of(n, 0);
    for (int t = 0; t < params.tree_count; ++t) {
        for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - prediction[i];
        RegressionTree tree = grow_tree(x, columns, residual, params.max_depth, leaf_of);
        for (std::size_t i = 0; i < n; ++i) {
            prediction[i] += params.shrinkage * tree.nodes[static_cast<std::size_t>(leaf_of[i])].value;
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

std::vector<double> boosting_training_curve(const BoostedModel& model, const Matrix& x, std::span<const double> y) {
    const std::size_t n = x.rows();
    std::vector<double> prediction(n, model.base_prediction);
    std::vector<double> curve;
    auto mse = [&] {
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += (y[i] - prediction[i]) * (y[i] - prediction[i]);
        return ss / static_cast<double>(n);
    };
    curve.push_back(mse());
    for (const auto& tree : model.trees) {
        for (std::size_t i = 0; i < n; ++i) prediction[i] += model.shrinkage * tree.evaluate(x.row(i));
        curve.push_back(mse());
    }
    return curve;
}

}  // namespace isa2
