#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csm/features.hpp"

namespace csm {

struct EarlyStopping {
    double validation_fraction = 0.2;  // (0, 1)
    int patience = 3;
};

struct GbrtParams {
    int max_depth = 10;
    int n_estimators = 15;
    double learning_rate = 0.3;  // (0, 1]
    int min_samples_leaf = 1;
    std::optional<EarlyStopping> early_stopping;

    void validate() const;
};

/// Flat node; a node with feature < 0 is a leaf carrying `value`.
/// Rows go left iff row[feature] < threshold.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class RegressionTree {
public:
    RegressionTree() : nodes_(1) {}
    explicit RegressionTree(std::vector<TreeNode> nodes);

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const TreeNode& root() const { return nodes_.front(); }

    double predict(std::span<const double> row) const;
    /// Index of the leaf a row lands in.
    int leaf_index(std::span<const double> row) const;
    std::size_t internal_count() const;
    /// Number of splits on the longest root-to-leaf path.
    int depth() const;

    friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

private:
    std::vector<TreeNode> nodes_;
};

struct TreeEnsemble {
    double base_score = 0.0;
    double learning_rate = 0.3;
    std::vector<std::string> columns;
    std::vector<RegressionTree> trees;
    /// Internal nodes per column across all trees.
    std::vector<std::size_t> split_counts;

    friend bool operator==(const TreeEnsemble&, const TreeEnsemble&) = default;
};

struct SplitCandidate {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;  // SSE(parent) - SSE(left) - SSE(right)
};

/// Exhaustive search over midpoints of consecutive distinct values of
/// every column. Ties go to the lowest feature, then the lowest threshold.
std::optional<SplitCandidate> best_split(const Eigen::MatrixXd& rows, std::span<const double> residuals,
                                         int min_samples_leaf = 1);

/// Threshold used between two consecutive distinct sorted values.
double split_midpoint(double lo, double hi);

/// Stagewise least-squares boosting of depth-limited regression trees.
TreeEnsemble fit_gbrt(const FeatureMatrix& m, const GbrtParams& params = {}, std::uint64_t seed = 0);

double predict_ensemble(const TreeEnsemble& e, std::span<const double> row);
Eigen::VectorXd predict_ensemble(const TreeEnsemble& e, const Eigen::MatrixXd& rows);

struct FeatureScore {
    std::string name;
    std::size_t index = 0;
    std::size_t f_score = 0;
};

struct FScoreReport {
    std::vector<FeatureScore> scores;  // descending f_score, ties by index

    std::size_t total() const;
};

FScoreReport feature_importance(const TreeEnsemble& e);

}  // namespace csm
