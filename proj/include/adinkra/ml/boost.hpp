#pragma once

#include <cstdint>
#include <vector>

#include "adinkra/ml/tree.hpp"

namespace adinkra::ml {

enum class BoostObjective { multi_softmax, multi_softprob };

// Multiclass gradient boosting: raw scores start at zero, and every
// round fits one regression tree per class to the softmax negative
// gradient (one-hot minus probability), with second-order leaf values
// sum(residual) / max(sum(p (1 - p)), 1e-6) and shrinkage lr. The two
// objectives share the model and the argmax prediction; multi_softprob
// additionally exposes class probabilities.
struct BoostModel {
  std::int64_t num_classes = 0;
  std::int64_t dim = 0;
  double lr = 0.3;
  BoostObjective objective = BoostObjective::multi_softprob;
  std::vector<RegressionTree> trees;  // round-major: trees[r * C + c]

  // Mean training cross-entropy before any round, then after each round.
  double initial_log_loss = 0.0;
  std::vector<double> round_log_loss;

  std::vector<double> scores(const float* x) const;
  std::vector<double> probabilities(const float* x) const;
  std::int64_t predict_one(const float* x) const;
  std::vector<std::int64_t> predict(const FeatureMatrix& queries) const;
};

BoostModel gradient_boost_train(const FeatureMatrix& train,
                                std::int64_t n_estimators = 100,
                                std::int64_t max_depth = 6,
                                BoostObjective objective =
                                    BoostObjective::multi_softprob,
                                double lr = 0.3,
                                std::int64_t num_classes = -1);

}  // namespace adinkra::ml
