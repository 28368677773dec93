#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "passnet/random.hpp"

namespace passnet {

/// Internal nodes send rows with x[feature] <= threshold to `left`.
/// Leaves carry `value`: a class distribution for classification trees, a
/// single output for regression trees.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> value;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct TreeParams {
    int max_depth = 10;
    std::size_t min_leaf = 1;
    /// Candidate features drawn per node; 0 means all features.
    std::size_t features_per_split = 0;
};

class DecisionTree {
public:
    DecisionTree() = default;
    explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    const std::vector<double>& leaf_value(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    int depth() const;

    bool operator==(const DecisionTree&) const = default;

private:
    std::vector<TreeNode> nodes_;
};

/// CART with Gini impurity. `rows` may repeat indices (bootstrap samples).
/// `labels` are class indices in [0, n_classes).
DecisionTree fit_classification_tree(const Eigen::MatrixXd& x, std::span<const int> labels,
                                     int n_classes, std::span<const std::size_t> rows,
                                     const TreeParams& params, Rng& rng);

/// Least-squares regression tree on `residuals`. Leaf value is
/// sum(residuals) / sum(hessians) over the rows in the leaf (0 when the
/// denominator vanishes), i.e. one Newton step for a twice-differentiable loss.
DecisionTree fit_regression_tree(const Eigen::MatrixXd& x, std::span<const double> residuals,
                                 std::span<const double> hessians,
                                 std::span<const std::size_t> rows, const TreeParams& params);

nlohmann::json to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const nlohmann::json& doc);

}  // namespace passnet
