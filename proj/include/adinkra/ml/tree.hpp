#pragma once

#include <cstdint>
#include <vector>

#include "adinkra/core/rng.hpp"
#include "adinkra/ml/features.hpp"

namespace adinkra::ml {

enum class Criterion { gini, entropy, log_loss };

Criterion parse_criterion(const std::string& name);

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int64_t leaf_class = 0;  // classification trees
  double leaf_value = 0.0;      // regression trees
};

// Greedy binary axis-aligned classification tree. Growth contract:
//  - candidate thresholds are the midpoints between consecutive distinct
//    sorted values of each scanned feature;
//  - the split minimising the weighted child impurity wins, scanning
//    features in ascending order and thresholds in ascending order, the
//    first strictly-better candidate kept on ties;
//  - a split must beat the parent impurity by more than 1e-12 times the
//    node weight, otherwise the node becomes a leaf;
//  - leaves predict the heaviest class, smallest index on ties.
// log_loss is computed identically to entropy.
struct DecisionTree {
  std::int64_t num_classes = 0;
  std::vector<TreeNode> nodes;  // preorder; nodes[0] is the root

  std::int64_t predict_one(const float* x) const;
  std::vector<std::int64_t> predict(const FeatureMatrix& queries) const;
  std::int64_t depth() const;  // leaf-only tree has depth 0
};

// Least-squares regression tree with the same scan and tie-break rules
// (impurity = sum of squared deviations; a split must beat the parent by
// more than 1e-12 times max(1, parent impurity)) and Newton leaf values
// sum(target) / max(sum(curvature), denom_floor).
struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict_one(const float* x) const;
};

// Sample order per feature, shared by every tree grown on one matrix.
struct PresortedFeatures {
  std::int64_t rows = 0;
  std::int64_t dim = 0;
  std::vector<std::int32_t> order;  // dim x rows, feature-major; ties by index

  static PresortedFeatures build(const FeatureMatrix& m);
};

DecisionTree decision_tree_train(const FeatureMatrix& train,
                                 Criterion criterion = Criterion::gini,
                                 std::int64_t max_depth = -1,
                                 std::int64_t num_classes = -1);

namespace detail {

// Shared grower. `weights` (replication counts, rows with zero excluded)
// and the per-node feature subsample (`max_features` drawn via `rng`) are
// the forest hooks; both default off. max_depth < 0 lifts the cap.
DecisionTree grow_classification_tree(const FeatureMatrix& train,
                                      const PresortedFeatures& sorted,
                                      Criterion criterion,
                                      std::int64_t max_depth,
                                      std::int64_t num_classes,
                                      const std::vector<std::int32_t>* weights,
                                      std::int64_t max_features,
                                      core::Rng* rng);

RegressionTree grow_regression_tree(const FeatureMatrix& train,
                                    const PresortedFeatures& sorted,
                                    const std::vector<double>& target,
                                    const std::vector<double>& curvature,
                                    std::int64_t max_depth,
                                    double denom_floor);

}  // namespace detail

}  // namespace adinkra::ml
