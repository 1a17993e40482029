#pragma once

#include <cstdint>
#include <vector>

#include "adinkra/ml/features.hpp"

namespace adinkra::ml {

enum class KnnWeights { uniform, distance };

// Exact k-nearest-neighbour classification. p selects the metric:
// 1 = Manhattan, 2 = Euclidean. Uniform weighting takes a majority vote
// over the k nearest training rows; distance weighting sums 1/d votes,
// except that exact matches (d = 0) dominate: when any of the k
// neighbours sits at distance zero, only those neighbours vote. All ties
// (equal distances during selection, equal vote totals) break toward the
// smaller index.
std::vector<std::int64_t> knn_classify(const FeatureMatrix& train,
                                       const FeatureMatrix& queries,
                                       std::int64_t k = 5,
                                       KnnWeights weights = KnnWeights::uniform,
                                       int p = 2);

}  // namespace adinkra::ml
