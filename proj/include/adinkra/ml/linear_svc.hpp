#pragma once

#include <cstdint>
#include <vector>

#include "adinkra/ml/features.hpp"

namespace adinkra::ml {

enum class SvcLoss { hinge, squared_hinge };

// One-vs-rest linear max-margin classifier.
struct LinearSvcModel {
  std::int64_t num_classes = 0;
  std::int64_t dim = 0;
  std::vector<double> weights;     // num_classes x dim, row-major
  std::vector<double> intercepts;  // num_classes

  std::vector<double> decision(const float* x) const;
  std::int64_t predict_one(const float* x) const;
  std::vector<std::int64_t> predict(const FeatureMatrix& queries) const;
};

// Trains one binary margin classifier per class with L2 penalty: each
// class c minimises (1/2)||w||^2 + C * sum_i loss(1 - y_i (w.x_i + b)),
// y_i = +1 for rows of class c and -1 otherwise. The solver is
// deterministic cyclic sub-gradient descent: samples are visited in row
// order for max_iter epochs, the t-th update uses step 1/(lambda t) with
// lambda = 1/(C n) (the strong-convexity modulus of the per-sample
// normalised objective, which shares the argmin), and after each
// violating update the weight vector is projected onto the ball of
// radius 1/sqrt(lambda) that is known to contain the optimum. The
// intercept is neither regularised nor projected.
LinearSvcModel linear_svc_train(const FeatureMatrix& train,
                                SvcLoss loss = SvcLoss::squared_hinge,
                                double C = 1.0, std::int64_t max_iter = 1000,
                                std::int64_t num_classes = -1);

}  // namespace adinkra::ml
