#include "adinkra/ml/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace adinkra::ml {

namespace {

// Squared Euclidean distance with four partial sums so the additions do
// not form one long dependency chain.
double squared_distance(const float* a, const float* b, std::int64_t dim) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::int64_t j = 0;
  for (; j + 4 <= dim; j += 4) {
    const double d0 = static_cast<double>(a[j]) - b[j];
    const double d1 = static_cast<double>(a[j + 1]) - b[j + 1];
    const double d2 = static_cast<double>(a[j + 2]) - b[j + 2];
    const double d3 = static_cast<double>(a[j + 3]) - b[j + 3];
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  for (; j < dim; ++j) {
    const double d = static_cast<double>(a[j]) - b[j];
    s0 += d * d;
  }
  return (s0 + s1) + (s2 + s3);
}

double manhattan_distance(const float* a, const float* b, std::int64_t dim) {
  double s0 = 0.0, s1 = 0.0;
  std::int64_t j = 0;
  for (; j + 2 <= dim; j += 2) {
    s0 += std::abs(static_cast<double>(a[j]) - b[j]);
    s1 += std::abs(static_cast<double>(a[j + 1]) - b[j + 1]);
  }
  for (; j < dim; ++j) s0 += std::abs(static_cast<double>(a[j]) - b[j]);
  return s0 + s1;
}

}  // namespace

std::vector<std::int64_t> knn_classify(const FeatureMatrix& train,
                                       const FeatureMatrix& queries,
                                       std::int64_t k, KnnWeights weights,
                                       int p) {
  validate(train);
  validate(queries);
  if (static_cast<std::int64_t>(train.labels.size()) != train.rows)
    throw PreconditionError("knn: training matrix has no labels");
  if (train.rows == 0) throw PreconditionError("knn: empty training matrix");
  if (queries.dim != train.dim)
    throw PreconditionError("knn: query dimension " +
                            std::to_string(queries.dim) + " != " +
                            std::to_string(train.dim));
  if (k < 1 || k > train.rows)
    throw PreconditionError("knn: k = " + std::to_string(k) +
                            " outside [1, " + std::to_string(train.rows) +
                            "]");
  if (p != 1 && p != 2)
    throw PreconditionError("knn: p = " + std::to_string(p) +
                            ", supported metrics are p=1 and p=2");

  const std::int64_t num_classes = infer_num_classes(train);
  std::vector<std::int64_t> out(static_cast<std::size_t>(queries.rows), 0);
  std::vector<double> dist(static_cast<std::size_t>(train.rows));
  std::vector<std::int32_t> index(static_cast<std::size_t>(train.rows));
  std::vector<double> votes(static_cast<std::size_t>(num_classes));

  for (std::int64_t q = 0; q < queries.rows; ++q) {
    const float* query = queries.row(q);
    if (p == 2) {
      for (std::int64_t i = 0; i < train.rows; ++i)
        dist[i] = squared_distance(train.row(i), query, train.dim);
    } else {
      for (std::int64_t i = 0; i < train.rows; ++i)
        dist[i] = manhattan_distance(train.row(i), query, train.dim);
    }

    std::iota(index.begin(), index.end(), 0);
    const auto closer = [&dist](std::int32_t a, std::int32_t b) {
      if (dist[a] != dist[b]) return dist[a] < dist[b];
      return a < b;
    };
    if (k < train.rows) {
      std::nth_element(index.begin(), index.begin() + (k - 1), index.end(),
                       closer);
    }
    // Exact-distance ties straddling the k-boundary resolve by index, so
    // the kept set is the sorted prefix.
    std::sort(index.begin(), index.begin() + k, closer);

    std::fill(votes.begin(), votes.end(), 0.0);
    bool exact_match = false;
    if (weights == KnnWeights::distance) {
      for (std::int64_t i = 0; i < k && !exact_match; ++i)
        exact_match = dist[index[i]] == 0.0;
    }
    for (std::int64_t i = 0; i < k; ++i) {
      const auto row = index[i];
      const auto label = train.labels[row];
      if (weights == KnnWeights::uniform) {
        votes[label] += 1.0;
      } else if (exact_match) {
        if (dist[row] == 0.0) votes[label] += 1.0;
      } else {
        const double d = p == 2 ? std::sqrt(dist[row]) : dist[row];
        votes[label] += 1.0 / d;
      }
    }

    std::int64_t best = 0;
    for (std::int64_t c = 1; c < num_classes; ++c)
      if (votes[c] > votes[best]) best = c;
    out[q] = best;
  }
  return out;
}

}  // namespace adinkra::ml
