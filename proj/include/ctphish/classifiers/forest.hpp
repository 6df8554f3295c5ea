#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ctphish/util/json.hpp"

namespace ctphish::classifiers {

/// Dense row-major sample matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
    void push_row(std::span<const double> values);
};

struct TreeNode {
    std::int32_t feature = -1;  ///< -1 for leaves
    double threshold = 0.0;     ///< samples with x[feature] <= threshold go left
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;         ///< phish fraction of the node's training samples
    double samples = 0.0;       ///< bootstrap samples reaching the node
    double impurity = 0.0;      ///< Gini impurity of the node

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

class DecisionTree {
public:
    DecisionTree() = default;
    explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    double predict(std::span<const double> x) const;
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    /// Per-feature impurity decrease, normalized to sum 1 (all zero for a stump).
    std::vector<double> importances(std::size_t n_features) const;

    Json to_json() const;
    static DecisionTree from_json(const Json& j);

private:
    std::vector<TreeNode> nodes_;
};

struct ForestParams {
    std::size_t n_trees = 200;
    std::uint64_t seed = 0;
    std::size_t max_features = 0;        ///< 0 selects floor(sqrt(p))
    std::size_t min_samples_split = 2;
    std::size_t threads = 0;             ///< 0 selects hardware concurrency
};

class RandomForest {
public:
    RandomForest() = default;
    RandomForest(std::size_t n_features, std::vector<DecisionTree> trees);

    /// labels: 1 = phish, 0 = benign. Throws EmptyClass, DimensionMismatch.
    static RandomForest train(const Matrix& x, const std::vector<int>& labels, const ForestParams& params);

    /// Mean leaf phish-fraction over trees. Throws DimensionMismatch, UntrainedModel.
    double score(std::span<const double> x) const;

    /// Mean decrease in impurity per feature, normalized to sum 1.
    std::vector<double> feature_importances() const;

    std::size_t n_features() const { return n_features_; }
    const std::vector<DecisionTree>& trees() const { return trees_; }
    bool empty() const { return trees_.empty(); }

    Json to_json() const;
    static RandomForest from_json(const Json& j);

private:
    std::size_t n_features_ = 0;
    std::vector<DecisionTree> trees_;
};

/// Builds the tree with index `tree_index` of a forest; exposed for tests.
DecisionTree grow_tree(const Matrix& x, const std::vector<int>& labels, const ForestParams& params,
                       std::uint64_t tree_index);

}  // namespace ctphish::classifiers
