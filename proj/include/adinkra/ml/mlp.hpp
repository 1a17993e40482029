#pragma once

#include <cstdint>
#include <vector>

#include "adinkra/ml/features.hpp"

namespace adinkra::ml {

enum class MlpActivation { relu, tanh };

MlpActivation parse_mlp_activation(const std::string& name);

// Fully connected softmax classifier trained with Adam on mean
// cross-entropy. Layer l maps width[l] -> width[l+1] with weights stored
// [in, out]; every hidden layer applies the configured activation.
struct MlpModel {
  std::int64_t dim = 0;
  std::int64_t num_classes = 0;
  std::vector<std::int64_t> hidden;
  MlpActivation activation = MlpActivation::relu;
  std::vector<std::vector<float>> weights;  // per layer, [in * out]
  std::vector<std::vector<float>> biases;   // per layer, [out]

  // Activations of the last hidden layer for one input row.
  std::vector<float> hidden_activations(const float* x) const;
  std::vector<double> decision(const float* x) const;
  std::int64_t predict_one(const float* x) const;
  std::vector<std::int64_t> predict(const FeatureMatrix& queries) const;
};

// He-initialised network (stddev sqrt(2 / fan_in), zero biases) trained
// for max_iter epochs of shuffled mini-batches; deterministic per seed.
// max_iter 0 returns the untrained initialisation.
MlpModel mlp_train(const FeatureMatrix& train,
                   std::vector<std::int64_t> hidden = {100},
                   MlpActivation activation = MlpActivation::relu,
                   std::int64_t max_iter = 200, double lr = 1e-3,
                   std::int64_t batch = 200, std::uint64_t seed = 0,
                   std::int64_t num_classes = -1);

}  // namespace adinkra::ml
