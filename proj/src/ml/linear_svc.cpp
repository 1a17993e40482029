#include "adinkra/ml/linear_svc.hpp"

#include <algorithm>
#include <cmath>

namespace adinkra::ml {

std::vector<double> LinearSvcModel::decision(const float* x) const {
  std::vector<double> scores(static_cast<std::size_t>(num_classes));
  for (std::int64_t c = 0; c < num_classes; ++c) {
    const double* w = weights.data() + static_cast<std::size_t>(c * dim);
    double s = 0.0;
    for (std::int64_t j = 0; j < dim; ++j) s += w[j] * x[j];
    scores[c] = s + intercepts[c];
  }
  return scores;
}

std::int64_t LinearSvcModel::predict_one(const float* x) const {
  const auto scores = decision(x);
  std::int64_t best = 0;
  for (std::int64_t c = 1; c < num_classes; ++c)
    if (scores[c] > scores[best]) best = c;
  return best;
}

std::vector<std::int64_t> LinearSvcModel::predict(
    const FeatureMatrix& queries) const {
  if (queries.dim != dim)
    throw PreconditionError("linear_svc: query dimension " +
                            std::to_string(queries.dim) + " != " +
                            std::to_string(dim));
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(queries.rows));
  for (std::int64_t i = 0; i < queries.rows; ++i)
    out.push_back(predict_one(queries.row(i)));
  return out;
}

LinearSvcModel linear_svc_train(const FeatureMatrix& train, SvcLoss loss,
                                double C, std::int64_t max_iter,
                                std::int64_t num_classes) {
  validate(train, num_classes);
  if (static_cast<std::int64_t>(train.labels.size()) != train.rows ||
      train.rows == 0)
    throw PreconditionError("linear_svc: labelled training rows required");
  if (max_iter < 1)
    throw PreconditionError("linear_svc: max_iter must be >= 1");
  if (!(C > 0.0)) throw PreconditionError("linear_svc: C must be positive");
  const std::int64_t inferred = infer_num_classes(train);
  if (num_classes < 0) num_classes = inferred;
  bool multiple = false;
  for (const auto label : train.labels)
    if (label != train.labels.front()) {
      multiple = true;
      break;
    }
  if (!multiple)
    throw InputError(
        "linear_svc: degenerate training set with a single class");

  const std::int64_t n = train.rows, d = train.dim;
  const double lambda = 1.0 / (C * static_cast<double>(n));
  const double radius_sq = 1.0 / lambda;

  std::vector<double> xnorm(static_cast<std::size_t>(n), 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    const float* x = train.row(i);
    double s = 0.0;
    for (std::int64_t j = 0; j < d; ++j) s += static_cast<double>(x[j]) * x[j];
    xnorm[i] = s;
  }

  // Each class keeps w = scale * v so the per-step shrink costs O(1);
  // norm2 tracks ||w||^2 incrementally for the projection test.
  const auto classes = static_cast<std::size_t>(num_classes);
  std::vector<std::vector<double>> v(classes,
                                     std::vector<double>(static_cast<std::size_t>(d), 0.0));
  std::vector<double> scale(classes, 1.0), norm2(classes, 0.0),
      intercept(classes, 0.0), dot_v(classes, 0.0);

  std::int64_t t = 0;
  for (std::int64_t epoch = 0; epoch < max_iter; ++epoch) {
    for (std::int64_t i = 0; i < n; ++i) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double shrink = 1.0 - 1.0 / static_cast<double>(t);
      const float* x = train.row(i);

      for (std::size_t c = 0; c < classes; ++c) {
        const double* w = v[c].data();
        double s0 = 0.0, s1 = 0.0;
        std::int64_t j = 0;
        for (; j + 2 <= d; j += 2) {
          s0 += w[j] * x[j];
          s1 += w[j + 1] * x[j + 1];
        }
        for (; j < d; ++j) s0 += w[j] * x[j];
        dot_v[c] = s0 + s1;
      }

      for (std::size_t c = 0; c < classes; ++c) {
        const double y =
            train.labels[i] == static_cast<std::int64_t>(c) ? 1.0 : -1.0;
        const double margin = y * (scale[c] * dot_v[c] + intercept[c]);

        scale[c] *= shrink;
        norm2[c] *= shrink * shrink;
        if (scale[c] < 1e-100) {  // exactly zero on the first step
          for (auto& w : v[c]) w *= scale[c];
          dot_v[c] *= scale[c];
          scale[c] = 1.0;
        }

        if (margin < 1.0) {
          const double f = loss == SvcLoss::hinge ? 1.0 : 2.0 * (1.0 - margin);
          const double coef = eta * f * y;
          const double inv_scale = coef / scale[c];
          double* w = v[c].data();
          for (std::int64_t jj = 0; jj < d; ++jj) w[jj] += inv_scale * x[jj];
          intercept[c] += coef;
          norm2[c] += 2.0 * coef * scale[c] * dot_v[c] + coef * coef * xnorm[i];
          if (norm2[c] < 0.0) norm2[c] = 0.0;
          if (norm2[c] > radius_sq) {
            scale[c] *= std::sqrt(radius_sq / norm2[c]);
            norm2[c] = radius_sq;
          }
        }
      }
    }
  }

  LinearSvcModel model;
  model.num_classes = num_classes;
  model.dim = d;
  model.weights.resize(classes * static_cast<std::size_t>(d));
  model.intercepts = intercept;
  for (std::size_t c = 0; c < classes; ++c) {
    double* w = model.weights.data() + c * static_cast<std::size_t>(d);
    for (std::int64_t j = 0; j < d; ++j) w[j] = scale[c] * v[c][j];
  }
  return model;
}

}  // namespace adinkra::ml
