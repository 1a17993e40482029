#pragma once

#include <cstdint>
#include <vector>

#include "adinkra/ml/tree.hpp"

namespace adinkra::ml {

// Bagged ensemble of classification trees. Tree i draws a bootstrap
// sample (rows, with replacement) and scans floor(sqrt(dim)) features
// per node, both from the stream Rng(hash_combine(seed, i)); prediction
// is a majority vote across trees, smallest class index on ties.
struct RandomForest {
  std::int64_t num_classes = 0;
  std::vector<DecisionTree> trees;

  std::int64_t predict_one(const float* x) const;
  std::vector<std::int64_t> predict(const FeatureMatrix& queries) const;
};

RandomForest random_forest_train(const FeatureMatrix& train,
                                 std::int64_t n_estimators = 100,
                                 Criterion criterion = Criterion::gini,
                                 std::int64_t max_depth = -1,
                                 std::uint64_t seed = 0,
                                 std::int64_t num_classes = -1);

}  // namespace adinkra::ml
