#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adinkra/core/error.hpp"

namespace adinkra::ml {

// Row-major matrix of 32-bit feature vectors with one class label per
// row. Query matrices may leave `labels` empty.
struct FeatureMatrix {
  std::int64_t rows = 0;
  std::int64_t dim = 0;
  std::vector<float> values;         // rows * dim, row-major
  std::vector<std::int64_t> labels;  // rows entries, or empty

  const float* row(std::int64_t i) const {
    return values.data() + static_cast<std::size_t>(i * dim);
  }
  float* row(std::int64_t i) {
    return values.data() + static_cast<std::size_t>(i * dim);
  }
};

// Throws PreconditionError unless sizes are consistent and every label
// (when labels are present) lies in [0, num_classes). Pass a negative
// num_classes to skip the range check.
void validate(const FeatureMatrix& m, std::int64_t num_classes = -1);

// Largest label + 1; zero for an unlabeled matrix.
std::int64_t infer_num_classes(const FeatureMatrix& m);

inline constexpr std::uint16_t kFeatureFileVersion = 1;

// Feature files carry magic "ADNF", a little-endian u16 format version,
// i64 row and dimension counts, the labels as i64 values, and the matrix
// as little-endian 32-bit floats in row-major order.
void save_features(const FeatureMatrix& m, const std::string& path);
FeatureMatrix load_features(const std::string& path);

// Per-dimension affine map fitted on a training split:
// x -> (x - mean) / max(stddev, 1e-8). Population variance; constant
// dimensions come out exactly zero.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> inv_std;

  static Standardizer fit(const FeatureMatrix& train);
  FeatureMatrix transform(const FeatureMatrix& m) const;
};

// Copy of `m` with rows (and labels) visited in `order`; `order` must be
// a permutation-sized index list into m's rows.
FeatureMatrix reorder(const FeatureMatrix& m,
                      const std::vector<std::int64_t>& order);

// Fraction of matching entries; the two vectors must be equally sized and
// non-empty.
double accuracy(const std::vector<std::int64_t>& predicted,
                const std::vector<std::int64_t>& labels);

}  // namespace adinkra::ml
