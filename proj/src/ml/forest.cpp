#include "adinkra/ml/forest.hpp"

#include <cmath>

namespace adinkra::ml {

std::int64_t RandomForest::predict_one(const float* x) const {
  std::vector<std::int64_t> votes(static_cast<std::size_t>(num_classes), 0);
  for (const auto& tree : trees) ++votes[tree.predict_one(x)];
  std::int64_t best = 0;
  for (std::int64_t c = 1; c < num_classes; ++c)
    if (votes[c] > votes[best]) best = c;
  return best;
}

std::vector<std::int64_t> RandomForest::predict(
    const FeatureMatrix& queries) const {
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(queries.rows));
  for (std::int64_t i = 0; i < queries.rows; ++i)
    out.push_back(predict_one(queries.row(i)));
  return out;
}

RandomForest random_forest_train(const FeatureMatrix& train,
                                 std::int64_t n_estimators,
                                 Criterion criterion, std::int64_t max_depth,
                                 std::uint64_t seed,
                                 std::int64_t num_classes) {
  validate(train, num_classes);
  if (static_cast<std::int64_t>(train.labels.size()) != train.rows ||
      train.rows < 1)
    throw PreconditionError("random_forest: labelled training rows required");
  if (n_estimators < 1)
    throw PreconditionError("random_forest: n_estimators must be >= 1");
  if (num_classes < 0) num_classes = infer_num_classes(train);

  const auto sorted = PresortedFeatures::build(train);
  const auto max_features = static_cast<std::int64_t>(
      std::floor(std::sqrt(static_cast<double>(train.dim))));

  RandomForest forest;
  forest.num_classes = num_classes;
  forest.trees.reserve(static_cast<std::size_t>(n_estimators));
  std::vector<std::int32_t> counts(static_cast<std::size_t>(train.rows));
  for (std::int64_t i = 0; i < n_estimators; ++i) {
    core::Rng rng(core::hash_combine(seed, static_cast<std::uint64_t>(i)));
    std::fill(counts.begin(), counts.end(), 0);
    for (std::int64_t j = 0; j < train.rows; ++j)
      ++counts[rng.uniform_index(static_cast<std::uint64_t>(train.rows))];
    forest.trees.push_back(detail::grow_classification_tree(
        train, sorted, criterion, max_depth, num_classes, &counts,
        max_features < 1 ? 1 : max_features, &rng));
  }
  return forest;
}

}  // namespace adinkra::ml
