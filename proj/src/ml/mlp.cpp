#include "adinkra/ml/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adinkra/core/adam.hpp"
#include "adinkra/core/ops.hpp"
#include "adinkra/core/rng.hpp"
#include "adinkra/core/tape.hpp"

namespace adinkra::ml {

MlpActivation parse_mlp_activation(const std::string& name) {
  if (name == "relu") return MlpActivation::relu;
  if (name == "tanh") return MlpActivation::tanh;
  throw ConfigError("unknown activation '" + name + "'");
}

namespace {

void apply_activation(std::vector<float>& v, MlpActivation activation) {
  if (activation == MlpActivation::relu) {
    for (auto& x : v) x = x > 0.0f ? x : 0.0f;
  } else {
    for (auto& x : v) x = std::tanh(x);
  }
}

std::vector<float> affine(const std::vector<float>& w,
                          const std::vector<float>& b,
                          const std::vector<float>& in) {
  const auto out_width = b.size();
  const auto in_width = in.size();
  std::vector<float> out(b);
  for (std::size_t i = 0; i < in_width; ++i) {
    const float x = in[i];
    const float* row = w.data() + i * out_width;
    for (std::size_t j = 0; j < out_width; ++j) out[j] += x * row[j];
  }
  return out;
}

}  // namespace

std::vector<float> MlpModel::hidden_activations(const float* x) const {
  std::vector<float> cur(x, x + dim);
  for (std::size_t l = 0; l + 1 < weights.size(); ++l) {
    cur = affine(weights[l], biases[l], cur);
    apply_activation(cur, activation);
  }
  return cur;
}

std::vector<double> MlpModel::decision(const float* x) const {
  const auto last = hidden_activations(x);
  const auto logits = affine(weights.back(), biases.back(), last);
  return std::vector<double>(logits.begin(), logits.end());
}

std::int64_t MlpModel::predict_one(const float* x) const {
  const auto scores = decision(x);
  std::int64_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c)
    if (scores[c] > scores[best]) best = static_cast<std::int64_t>(c);
  return best;
}

std::vector<std::int64_t> MlpModel::predict(
    const FeatureMatrix& queries) const {
  if (queries.dim != dim)
    throw PreconditionError("mlp: query dimension " +
                            std::to_string(queries.dim) + " != " +
                            std::to_string(dim));
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(queries.rows));
  for (std::int64_t i = 0; i < queries.rows; ++i)
    out.push_back(predict_one(queries.row(i)));
  return out;
}

MlpModel mlp_train(const FeatureMatrix& train,
                   std::vector<std::int64_t> hidden,
                   MlpActivation activation, std::int64_t max_iter, double lr,
                   std::int64_t batch, std::uint64_t seed,
                   std::int64_t num_classes) {
  validate(train, num_classes);
  if (static_cast<std::int64_t>(train.labels.size()) != train.rows ||
      train.rows < 1)
    throw PreconditionError("mlp: labelled training rows required");
  for (const auto width : hidden)
    if (width < 1)
      throw PreconditionError("mlp: hidden width " + std::to_string(width) +
                              " must be >= 1");
  if (max_iter < 0) throw PreconditionError("mlp: max_iter must be >= 0");
  if (batch < 1) throw PreconditionError("mlp: batch must be >= 1");
  if (lr < 0.0) throw PreconditionError("mlp: negative learning rate");
  if (num_classes < 0) num_classes = infer_num_classes(train);

  const std::int64_t n = train.rows, d = train.dim;
  std::vector<std::int64_t> widths;
  widths.push_back(d);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(num_classes);
  const auto layers = widths.size() - 1;

  std::vector<core::ParamTensor<float>> params;
  params.reserve(layers * 2);
  for (std::size_t l = 0; l < layers; ++l) {
    const auto in = widths[l], out = widths[l + 1];
    auto w = core::make_tensor<float>({in, out});
    core::Rng rng(core::hash_combine(seed, 1, static_cast<std::uint64_t>(l)));
    const double stddev = std::sqrt(2.0 / static_cast<double>(in));
    for (auto& v : w->values()) v = static_cast<float>(stddev * rng.normal());
    params.emplace_back("w" + std::to_string(l + 1), std::move(w));
    params.emplace_back("b" + std::to_string(l + 1),
                        core::make_tensor<float>({out}));
  }
  std::vector<core::ParamTensor<float>*> param_ptrs;
  for (auto& p : params) param_ptrs.push_back(&p);

  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (std::int64_t epoch = 0; epoch < max_iter; ++epoch) {
    core::Rng shuffle_rng(
        core::hash_combine(seed, 2, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    for (std::int64_t start = 0; start < n; start += batch) {
      const std::int64_t rows = std::min(batch, n - start);
      std::vector<float> values(static_cast<std::size_t>(rows * d));
      std::vector<std::int64_t> targets(static_cast<std::size_t>(rows));
      for (std::int64_t i = 0; i < rows; ++i) {
        const auto src = order[start + i];
        std::copy_n(train.row(src), d, values.begin() + i * d);
        targets[i] = train.labels[src];
      }
      core::Tape<float> tape;
      auto x = core::make_tensor<float>({rows, d}, std::move(values));
      for (std::size_t l = 0; l < layers; ++l) {
        x = core::linear(tape, x, params[2 * l].value,
                              params[2 * l + 1].value);
        if (l + 1 < layers)
          x = activation == MlpActivation::relu ? core::relu(tape, x)
                                                : core::tanh(tape, x);
      }
      auto loss = core::softmax_cross_entropy(tape, x, targets);
      tape.backward(loss.loss, true);
      core::adam_step(param_ptrs, lr);
      for (auto* p : param_ptrs) p->value->drop_grad();
    }
  }

  MlpModel model;
  model.dim = d;
  model.num_classes = num_classes;
  model.hidden = std::move(hidden);
  model.activation = activation;
  for (std::size_t l = 0; l < layers; ++l) {
    model.weights.push_back(params[2 * l].value->values());
    model.biases.push_back(params[2 * l + 1].value->values());
  }
  return model;
}

}  // namespace adinkra::ml
