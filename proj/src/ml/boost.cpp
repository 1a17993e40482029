#include "adinkra/ml/boost.hpp"

#include <algorithm>
#include <cmath>

namespace adinkra::ml {

namespace {

// Softmax of one score row into probs, numerically shifted.
void softmax_row(const double* scores, std::int64_t c, double* probs) {
  double top = scores[0];
  for (std::int64_t k = 1; k < c; ++k) top = scores[k] > top ? scores[k] : top;
  double denom = 0.0;
  for (std::int64_t k = 0; k < c; ++k) {
    probs[k] = std::exp(scores[k] - top);
    denom += probs[k];
  }
  for (std::int64_t k = 0; k < c; ++k) probs[k] /= denom;
}

double mean_log_loss(const std::vector<double>& probs,
                     const std::vector<std::int64_t>& labels,
                     std::int64_t c) {
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = probs[i * static_cast<std::size_t>(c) +
                           static_cast<std::size_t>(labels[i])];
    total += -std::log(p > 1e-300 ? p : 1e-300);
  }
  return total / static_cast<double>(labels.size());
}

}  // namespace

std::vector<double> BoostModel::scores(const float* x) const {
  std::vector<double> out(static_cast<std::size_t>(num_classes), 0.0);
  const auto rounds =
      static_cast<std::int64_t>(trees.size()) / (num_classes > 0 ? num_classes : 1);
  for (std::int64_t r = 0; r < rounds; ++r)
    for (std::int64_t c = 0; c < num_classes; ++c)
      out[c] += lr * trees[r * num_classes + c].predict_one(x);
  return out;
}

std::vector<double> BoostModel::probabilities(const float* x) const {
  const auto raw = scores(x);
  std::vector<double> probs(raw.size());
  softmax_row(raw.data(), num_classes, probs.data());
  return probs;
}

std::int64_t BoostModel::predict_one(const float* x) const {
  const auto raw = scores(x);
  std::int64_t best = 0;
  for (std::int64_t c = 1; c < num_classes; ++c)
    if (raw[c] > raw[best]) best = c;
  return best;
}

std::vector<std::int64_t> BoostModel::predict(
    const FeatureMatrix& queries) const {
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(queries.rows));
  for (std::int64_t i = 0; i < queries.rows; ++i)
    out.push_back(predict_one(queries.row(i)));
  return out;
}

BoostModel gradient_boost_train(const FeatureMatrix& train,
                                std::int64_t n_estimators,
                                std::int64_t max_depth,
                                BoostObjective objective, double lr,
                                std::int64_t num_classes) {
  validate(train, num_classes);
  if (static_cast<std::int64_t>(train.labels.size()) != train.rows ||
      train.rows < 1)
    throw PreconditionError("gradient_boost: labelled training rows required");
  if (n_estimators < 1)
    throw PreconditionError("gradient_boost: n_estimators must be >= 1");
  if (max_depth < 1)
    throw PreconditionError("gradient_boost: max_depth must be >= 1");
  if (num_classes < 0) num_classes = infer_num_classes(train);

  const std::int64_t n = train.rows, c = num_classes;
  const auto sorted = PresortedFeatures::build(train);

  BoostModel model;
  model.num_classes = c;
  model.dim = train.dim;
  model.lr = lr;
  model.objective = objective;
  model.trees.reserve(static_cast<std::size_t>(n_estimators * c));

  std::vector<double> score(static_cast<std::size_t>(n * c), 0.0);
  std::vector<double> prob(static_cast<std::size_t>(n * c), 0.0);
  std::vector<double> residual(static_cast<std::size_t>(n), 0.0);
  std::vector<double> curvature(static_cast<std::size_t>(n), 0.0);

  const auto refresh_probs = [&] {
    for (std::int64_t i = 0; i < n; ++i)
      softmax_row(score.data() + i * c, c, prob.data() + i * c);
  };

  refresh_probs();
  model.initial_log_loss = mean_log_loss(prob, train.labels, c);
  model.round_log_loss.reserve(static_cast<std::size_t>(n_estimators));

  for (std::int64_t round = 0; round < n_estimators; ++round) {
    for (std::int64_t k = 0; k < c; ++k) {
      for (std::int64_t i = 0; i < n; ++i) {
        const double p = prob[i * c + k];
        residual[i] = (train.labels[i] == k ? 1.0 : 0.0) - p;
        curvature[i] = p * (1.0 - p);
      }
      auto tree = detail::grow_regression_tree(train, sorted, residual,
                                               curvature, max_depth, 1e-6);
      for (std::int64_t i = 0; i < n; ++i)
        score[i * c + k] += lr * tree.predict_one(train.row(i));
      model.trees.push_back(std::move(tree));
    }
    refresh_probs();
    model.round_log_loss.push_back(mean_log_loss(prob, train.labels, c));
  }
  return model;
}

}  // namespace adinkra::ml
