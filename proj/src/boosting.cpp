#include "csm/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "csm/error.hpp"

namespace csm {

namespace {

using RowIndex = std::uint32_t;

// Per-column row order, ascending by value then row index.
std::vector<std::vector<RowIndex>> presort(const Eigen::MatrixXd& x, const std::vector<RowIndex>& rows) {
    std::vector<std::vector<RowIndex>> order(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
        auto& o = order[static_cast<std::size_t>(f)];
        o = rows;
        std::sort(o.begin(), o.end(), [&](RowIndex a, RowIndex b) {
            const double va = x(a, f);
            const double vb = x(b, f);
            return va < vb || (va == vb && a < b);
        });
    }
    return order;
}

struct NodeStats {
    std::size_t count = 0;
    double sum = 0.0;
    double mean = 0.0;
    double sse = 0.0;
    double sumsq = 0.0;
    bool splittable = false;
    std::optional<SplitCandidate> best;

    double tolerance() const { return 1e-10 * sse + 1e-12 * sumsq; }
};

struct SweepState {
    std::size_t left_count = 0;
    double left_centered = 0.0;
    double last = 0.0;
    bool has_last = false;
};

// Finds the best split of every splittable node in `stats`, where
// `slot_of[row]` maps a row to its node slot (or -1).
void search_splits(const Eigen::MatrixXd& x, const std::vector<std::vector<RowIndex>>& order,
                   std::span<const double> residuals, const std::vector<int>& slot_of, std::vector<NodeStats>& stats,
                   std::size_t min_leaf) {
    std::vector<SweepState> sweep(stats.size());
    for (std::size_t f = 0; f < order.size(); ++f) {
        std::fill(sweep.begin(), sweep.end(), SweepState{});
        const auto col = static_cast<Eigen::Index>(f);
        for (RowIndex r : order[f]) {
            const int slot = slot_of[r];
            if (slot < 0) continue;
            auto& node = stats[static_cast<std::size_t>(slot)];
            if (!node.splittable) continue;
            auto& s = sweep[static_cast<std::size_t>(slot)];
            const double v = x(r, col);
            if (s.has_last && v > s.last && s.left_count >= min_leaf && node.count - s.left_count >= min_leaf) {
                const double nl = static_cast<double>(s.left_count);
                const double nr = static_cast<double>(node.count - s.left_count);
                const double gain = s.left_centered * s.left_centered * static_cast<double>(node.count) / (nl * nr);
                const double floor = node.best ? node.best->gain : 0.0;
                if (gain > floor + node.tolerance()) {
                    node.best = SplitCandidate{f, split_midpoint(s.last, v), gain};
                }
            }
            s.left_count += 1;
            s.left_centered += residuals[r] - node.mean;
            s.last = v;
            s.has_last = true;
        }
    }
}

void accumulate_stats(std::span<const double> residuals, const std::vector<RowIndex>& rows,
                      const std::vector<int>& slot_of, std::vector<NodeStats>& stats) {
    for (RowIndex r : rows) {
        const int slot = slot_of[r];
        if (slot < 0) continue;
        auto& s = stats[static_cast<std::size_t>(slot)];
        s.count += 1;
        s.sum += residuals[r];
        s.sumsq += residuals[r] * residuals[r];
    }
    for (auto& s : stats) {
        if (s.count > 0) s.mean = s.sum / static_cast<double>(s.count);
    }
    for (RowIndex r : rows) {
        const int slot = slot_of[r];
        if (slot < 0) continue;
        auto& s = stats[static_cast<std::size_t>(slot)];
        const double d = residuals[r] - s.mean;
        s.sse += d * d;
    }
}

// Grows one tree level by level. On return `leaf_of[row]` holds the leaf
// node id for every training row.
RegressionTree grow_tree(const Eigen::MatrixXd& x, const std::vector<std::vector<RowIndex>>& order,
                         const std::vector<RowIndex>& rows, std::span<const double> residuals, const GbrtParams& params,
                         std::vector<int>& leaf_of) {
    const auto min_leaf = static_cast<std::size_t>(params.min_samples_leaf);
    std::vector<TreeNode> nodes(1);
    std::vector<int> frontier{0};
    std::vector<int> slot_of(static_cast<std::size_t>(x.rows()), -1);
    for (RowIndex r : rows) slot_of[r] = 0;

    for (int depth = 0; !frontier.empty(); ++depth) {
        std::vector<NodeStats> stats(frontier.size());
        accumulate_stats(residuals, rows, slot_of, stats);
        bool any = false;
        for (auto& s : stats) {
            s.splittable = depth < params.max_depth && s.count >= 2 && s.count >= 2 * min_leaf;
            any = any || s.splittable;
        }
        if (any) search_splits(x, order, residuals, slot_of, stats, min_leaf);

        std::vector<int> next;
        std::vector<int> child_slot(frontier.size() * 2, -1);
        for (std::size_t k = 0; k < frontier.size(); ++k) {
            const int id = frontier[k];
            const auto& s = stats[k];
            if (s.best) {
                const int left = static_cast<int>(nodes.size());
                nodes.emplace_back();
                nodes.emplace_back();
                auto& node = nodes[static_cast<std::size_t>(id)];
                node.feature = static_cast<int>(s.best->feature);
                node.threshold = s.best->threshold;
                node.left = left;
                node.right = left + 1;
                child_slot[2 * k] = static_cast<int>(next.size());
                next.push_back(left);
                child_slot[2 * k + 1] = static_cast<int>(next.size());
                next.push_back(left + 1);
            } else {
                nodes[static_cast<std::size_t>(id)].value = s.mean;
            }
        }
        // Route rows: leaves record their final node id, split nodes pass rows on.
        for (RowIndex r : rows) {
            const int slot = slot_of[r];
            if (slot < 0) continue;
            const auto k = static_cast<std::size_t>(slot);
            const auto& node = nodes[static_cast<std::size_t>(frontier[k])];
            if (node.is_leaf()) {
                leaf_of[r] = frontier[k];
                slot_of[r] = -1;
            } else {
                const bool left = x(r, node.feature) < node.threshold;
                slot_of[r] = child_slot[2 * k + (left ? 0 : 1)];
            }
        }
        frontier = std::move(next);
    }
    // Renumber in depth-first preorder so the layout matches a nested round trip.
    std::vector<TreeNode> ordered;
    std::vector<int> new_id(nodes.size(), -1);
    std::vector<int> stack{0};
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        new_id[static_cast<std::size_t>(id)] = static_cast<int>(ordered.size());
        ordered.push_back(nodes[static_cast<std::size_t>(id)]);
        const auto& n = nodes[static_cast<std::size_t>(id)];
        if (!n.is_leaf()) {
            stack.push_back(n.right);
            stack.push_back(n.left);
        }
    }
    for (auto& n : ordered) {
        if (!n.is_leaf()) {
            n.left = new_id[static_cast<std::size_t>(n.left)];
            n.right = new_id[static_cast<std::size_t>(n.right)];
        }
    }
    for (RowIndex r : rows) leaf_of[r] = new_id[static_cast<std::size_t>(leaf_of[r])];
    return RegressionTree(std::move(ordered));
}

std::vector<std::size_t> count_splits(const std::vector<RegressionTree>& trees, std::size_t columns) {
    std::vector<std::size_t> counts(columns, 0);
    for (const auto& t : trees) {
        for (const auto& n : t.nodes()) {
            if (!n.is_leaf()) counts.at(static_cast<std::size_t>(n.feature)) += 1;
        }
    }
    return counts;
}

double mean_over(const Eigen::VectorXd& y, const std::vector<RowIndex>& rows) {
    double s = 0.0;
    for (RowIndex r : rows) s += y(r);
    return s / static_cast<double>(rows.size());
}

}  // namespace

void GbrtParams::validate() const {
    if (max_depth < 1) throw Error(ErrorKind::invalid_argument, "max_depth must be >= 1");
    if (n_estimators < 1) throw Error(ErrorKind::invalid_argument, "n_estimators must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        throw Error(ErrorKind::invalid_argument, "learning_rate must lie in (0, 1]");
    }
    if (min_samples_leaf < 1) throw Error(ErrorKind::invalid_argument, "min_samples_leaf must be >= 1");
    if (early_stopping) {
        const auto& es = *early_stopping;
        if (!(es.validation_fraction > 0.0 && es.validation_fraction < 1.0)) {
            throw Error(ErrorKind::invalid_argument, "validation_fraction must lie in (0, 1)");
        }
        if (es.patience < 1) throw Error(ErrorKind::invalid_argument, "patience must be >= 1");
    }
}

double split_midpoint(double lo, double hi) {
    const double mid = lo + (hi - lo) / 2.0;
    // Adjacent doubles: fall back to `hi` so that `lo < threshold <= hi` holds.
    if (!(lo < mid && mid <= hi)) return hi;
    return mid;
}

RegressionTree::RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) {
        throw Error(ErrorKind::validation, "tree needs at least a root node");
    }
    for (const auto& n : nodes_) {
        if (n.is_leaf()) continue;
        const auto size = static_cast<int>(nodes_.size());
        if (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size) {
            throw Error(ErrorKind::validation, "internal tree node lacks a child");
        }
    }
}

int RegressionTree::leaf_index(std::span<const double> row) const {
    int id = 0;
    while (!nodes_[static_cast<std::size_t>(id)].is_leaf()) {
        const auto& n = nodes_[static_cast<std::size_t>(id)];
        id = row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return id;
}

double RegressionTree::predict(std::span<const double> row) const {
    return nodes_[static_cast<std::size_t>(leaf_index(row))].value;
}

std::size_t RegressionTree::internal_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
}

int RegressionTree::depth() const {
    std::vector<std::pair<int, int>> stack{{0, 0}};
    int best = 0;
    while (!stack.empty()) {
        auto [id, d] = stack.back();
        stack.pop_back();
        const auto& n = nodes_[static_cast<std::size_t>(id)];
        if (n.is_leaf()) {
            best = std::max(best, d);
        } else {
            stack.emplace_back(n.left, d + 1);
            stack.emplace_back(n.right, d + 1);
        }
    }
    return best;
}

std::optional<SplitCandidate> best_split(const Eigen::MatrixXd& rows, std::span<const double> residuals,
                                         int min_samples_leaf) {
    if (static_cast<std::size_t>(rows.rows()) != residuals.size()) {
        throw Error(ErrorKind::invalid_argument, "best_split: residual count differs from row count");
    }
    if (rows.rows() < 2) return std::nullopt;
    std::vector<RowIndex> all(static_cast<std::size_t>(rows.rows()));
    std::iota(all.begin(), all.end(), RowIndex{0});
    const auto order = presort(rows, all);
    std::vector<int> slot_of(all.size(), 0);
    std::vector<NodeStats> stats(1);
    accumulate_stats(residuals, all, slot_of, stats);
    const auto min_leaf = static_cast<std::size_t>(std::max(1, min_samples_leaf));
    stats[0].splittable = stats[0].count >= 2 * min_leaf;
    if (!stats[0].splittable) return std::nullopt;
    search_splits(rows, order, residuals, slot_of, stats, min_leaf);
    return stats[0].best;
}

TreeEnsemble fit_gbrt(const FeatureMatrix& m, const GbrtParams& params, std::uint64_t seed) {
    params.validate();
    const auto n = m.row_count();
    if (n < 2) {
        throw Error(ErrorKind::insufficient_data, fmt::format("boosting needs >= 2 rows, got {}", n));
    }
    const Eigen::MatrixXd& x = m.rows;
    const Eigen::VectorXd& y = m.target;

    std::vector<RowIndex> train(n);
    std::iota(train.begin(), train.end(), RowIndex{0});
    std::vector<RowIndex> valid;
    if (params.early_stopping) {
        std::mt19937_64 rng(seed);
        std::shuffle(train.begin(), train.end(), rng);
        auto n_valid = static_cast<std::size_t>(std::floor(params.early_stopping->validation_fraction * double(n)));
        n_valid = std::clamp<std::size_t>(n_valid, 1, n - 2);
        valid.assign(train.end() - static_cast<std::ptrdiff_t>(n_valid), train.end());
        train.resize(n - n_valid);
        std::sort(train.begin(), train.end());
        std::sort(valid.begin(), valid.end());
    }

    TreeEnsemble e;
    e.learning_rate = params.learning_rate;
    e.columns = m.column_names();
    e.base_score = mean_over(y, train);

    const auto order = presort(x, train);
    std::vector<double> pred(n, e.base_score);
    std::vector<double> residuals(n, 0.0);
    std::vector<int> leaf_of(n, -1);

    double best_valid = std::numeric_limits<double>::infinity();
    std::size_t best_rounds = 0;
    int since_best = 0;
    auto valid_mse = [&] {
        double s = 0.0;
        for (RowIndex r : valid) s += (y(r) - pred[r]) * (y(r) - pred[r]);
        return s / static_cast<double>(valid.size());
    };
    if (!valid.empty()) best_valid = valid_mse();

    std::vector<double> row(static_cast<std::size_t>(x.cols()));
    for (int round = 0; round < params.n_estimators; ++round) {
        for (RowIndex r : train) residuals[r] = y(r) - pred[r];
        RegressionTree tree = grow_tree(x, order, train, residuals, params, leaf_of);
        for (RowIndex r : train) pred[r] += e.learning_rate * tree.nodes()[static_cast<std::size_t>(leaf_of[r])].value;
        for (RowIndex r : valid) {
            for (Eigen::Index j = 0; j < x.cols(); ++j) row[static_cast<std::size_t>(j)] = x(r, j);
            pred[r] += e.learning_rate * tree.predict(row);
        }
        e.trees.push_back(std::move(tree));
        if (!valid.empty()) {
            const double mse = valid_mse();
            if (mse < best_valid) {
                best_valid = mse;
                best_rounds = e.trees.size();
                since_best = 0;
            } else if (++since_best >= params.early_stopping->patience) {
                break;
            }
        }
    }
    if (!valid.empty()) e.trees.resize(best_rounds);
    e.split_counts = count_splits(e.trees, m.column_count());
    return e;
}

double predict_ensemble(const TreeEnsemble& e, std::span<const double> row) {
    if (row.size() != e.columns.size()) {
        throw Error(ErrorKind::model_mismatch,
                    fmt::format("row has {} values, ensemble expects {}", row.size(), e.columns.size()));
    }
    double y = e.base_score;
    for (const auto& t : e.trees) y += e.learning_rate * t.predict(row);
    return y;
}

Eigen::VectorXd predict_ensemble(const TreeEnsemble& e, const Eigen::MatrixXd& rows) {
    Eigen::VectorXd out(rows.rows());
    std::vector<double> row(static_cast<std::size_t>(rows.cols()));
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        for (Eigen::Index j = 0; j < rows.cols(); ++j) row[static_cast<std::size_t>(j)] = rows(i, j);
        out(i) = predict_ensemble(e, row);
    }
    return out;
}

std::size_t FScoreReport::total() const {
    std::size_t t = 0;
    for (const auto& s : scores) t += s.f_score;
    return t;
}

FScoreReport feature_importance(const TreeEnsemble& e) {
    FScoreReport report;
    const auto counts = e.split_counts.size() == e.columns.size() ? e.split_counts
                                                                  : count_splits(e.trees, e.columns.size());
    for (std::size_t i = 0; i < e.columns.size(); ++i) {
        report.scores.push_back({e.columns[i], i, counts[i]});
    }
    std::stable_sort(report.scores.begin(), report.scores.end(), [](const FeatureScore& a, const FeatureScore& b) {
        return a.f_score > b.f_score;
    });
    return report;
}

}  // namespace csm
