#pragma once

// Independent reference implementations used as test oracles. They trade
// speed for directness and share no code with the library.

#include <cmath>
#include <optional>
#include <vector>

namespace csm::oracle {

struct NaiveMetrics {
    double mae = 0.0;
    double rmse = 0.0;
    std::optional<double> mape;
};

inline NaiveMetrics metrics(const std::vector<double>& y, const std::vector<double>& yhat, double eps = 1.0) {
    NaiveMetrics m;
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    double pct_sum = 0.0;
    int pct_n = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - yhat[i];
        abs_sum += std::abs(e);
        sq_sum += e * e;
        if (std::abs(y[i]) > eps) {
            pct_sum += std::abs(e / y[i]);
            ++pct_n;
        }
    }
    const double n = static_cast<double>(y.size());
    m.mae = abs_sum / n;
    m.rmse = std::sqrt(sq_sum / n);
    if (pct_n > 0) m.mape = 100.0 * pct_sum / pct_n;
    return m;
}

struct Node {
    int feature = -1;
    double threshold = 0.0;
    double value = 0.0;
    int left = -1;
    int right = -1;
};

using Table = std::vector<std::vector<double>>;  // rows x features

inline double sse_of(const std::vector<double>& r, const std::vector<int>& idx) {
    if (idx.empty()) return 0.0;
    double mean = 0.0;
    for (int i : idx) mean += r[static_cast<std::size_t>(i)];
    mean /= static_cast<double>(idx.size());
    double s = 0.0;
    for (int i : idx) s += (r[static_cast<std::size_t>(i)] - mean) * (r[static_cast<std::size_t>(i)] - mean);
    return s;
}

/// Tries every (feature, threshold) pair at every node; thresholds are the
/// midpoints between consecutive distinct values present in the node. Gains
/// within 1e-10 * SSE + 1e-12 * sum of squares of the best count as ties and
/// go to the lowest feature, then the lowest threshold.
inline void grow(const Table& x, const std::vector<double>& r, const std::vector<int>& idx, int depth, int max_depth,
                 int min_leaf, std::vector<Node>& out) {
    const int id = static_cast<int>(out.size());
    out.push_back(Node{});
    double mean = 0.0;
    double sumsq = 0.0;
    for (int i : idx) {
        mean += r[static_cast<std::size_t>(i)];
        sumsq += r[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(i)];
    }
    mean /= static_cast<double>(idx.size());
    const double parent = sse_of(r, idx);
    const double tol = 1e-10 * parent + 1e-12 * sumsq;

    int best_f = -1;
    double best_t = 0.0;
    double best_gain = 0.0;
    if (depth < max_depth && static_cast<int>(idx.size()) >= 2 * min_leaf) {
        const std::size_t features = x.front().size();
        for (std::size_t f = 0; f < features; ++f) {
            std::vector<double> values;
            for (int i : idx) values.push_back(x[static_cast<std::size_t>(i)][f]);
            std::sort(values.begin(), values.end());
            values.erase(std::unique(values.begin(), values.end()), values.end());
            for (std::size_t k = 0; k + 1 < values.size(); ++k) {
                const double lo = values[k];
                const double hi = values[k + 1];
                double t = lo + (hi - lo) / 2.0;
                if (!(t > lo && t <= hi)) t = hi;
                std::vector<int> l, rr;
                for (int i : idx) (x[static_cast<std::size_t>(i)][f] < t ? l : rr).push_back(i);
                if (static_cast<int>(l.size()) < min_leaf || static_cast<int>(rr.size()) < min_leaf) continue;
                const double gain = parent - sse_of(r, l) - sse_of(r, rr);
                if (gain > best_gain + tol) {
                    best_gain = gain;
                    best_f = static_cast<int>(f);
                    best_t = t;
                }
            }
        }
    }
    if (best_f < 0) {
        out[static_cast<std::size_t>(id)].value = mean;
        return;
    }
    std::vector<int> l, rr;
    for (int i : idx) (x[static_cast<std::size_t>(i)][static_cast<std::size_t>(best_f)] < best_t ? l : rr).push_back(i);
    out[static_cast<std::size_t>(id)].feature = best_f;
    out[static_cast<std::size_t>(id)].threshold = best_t;
    out[static_cast<std::size_t>(id)].left = static_cast<int>(out.size());
    grow(x, r, l, depth + 1, max_depth, min_leaf, out);
    out[static_cast<std::size_t>(id)].right = static_cast<int>(out.size());
    grow(x, r, rr, depth + 1, max_depth, min_leaf, out);
}

inline double route(const std::vector<Node>& tree, const std::vector<double>& row) {
    int id = 0;
    while (tree[static_cast<std::size_t>(id)].feature >= 0) {
        const auto& n = tree[static_cast<std::size_t>(id)];
        id = row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return tree[static_cast<std::size_t>(id)].value;
}

/// Stagewise boosting built on `grow`.
inline std::vector<std::vector<Node>> boost(const Table& x, const std::vector<double>& y, int trees, int max_depth,
                                           double lr, int min_leaf) {
    double base = 0.0;
    for (double v : y) base += v;
    base /= static_cast<double>(y.size());
    std::vector<double> pred(y.size(), base);
    std::vector<int> all(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) all[i] = static_cast<int>(i);
    std::vector<std::vector<Node>> out;
    for (int t = 0; t < trees; ++t) {
        std::vector<double> r(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] - pred[i];
        std::vector<Node> tree;
        grow(x, r, all, 0, max_depth, min_leaf, tree);
        for (std::size_t i = 0; i < y.size(); ++i) pred[i] += lr * route(tree, x[i]);
        out.push_back(std::move(tree));
    }
    return out;
}

}  // namespace csm::oracle
