#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "adinkra/core/adam.hpp"
#include "adinkra/core/ops.hpp"
#include "adinkra/core/rng.hpp"
#include "adinkra/core/tape.hpp"
#include "adinkra/core/tensor.hpp"

namespace adinkra::cnn {

using adinkra::core::ParamTensor;
using adinkra::core::Tape;
using adinkra::core::TensorPtr;

// Architecture description. Defaults give the full-scale network: six 3x3
// convolutions [64,128,256,256,512,512] with 2x2 max pools after the
// second, fourth and sixth, then three fully connected layers
// [4096, 4096, num_classes] with dropout after the first two.
struct ModelSpec {
  std::int64_t input_size = 128;
  std::int64_t input_channels = 3;
  std::vector<std::int64_t> conv_channels = {64, 128, 256, 256, 512, 512};
  std::vector<std::int64_t> pool_after = {2, 4, 6};  // 1-based conv indices
  std::vector<std::int64_t> fc_widths = {4096, 4096, 62};
  double dropout_p = 0.5;
  std::int64_t num_classes = 62;
};

// Desk-scale configuration: 64-pixel input and 512-wide FC layers. Same
// conv stack, so the flatten width drops from 131,072 to 32,768.
inline ModelSpec reduced_spec(std::int64_t num_classes = 62) {
  ModelSpec spec;
  spec.input_size = 64;
  spec.fc_widths = {512, 512, num_classes};
  spec.num_classes = num_classes;
  return spec;
}

inline void validate_spec(const ModelSpec& spec) {
  const std::int64_t pools = static_cast<std::int64_t>(spec.pool_after.size());
  const std::int64_t factor = std::int64_t(1) << pools;
  if (spec.input_size <= 0 || spec.input_size % factor != 0)
    throw ConfigError("model spec: input_size must be a positive multiple of " +
                      std::to_string(factor) + ", got " +
                      std::to_string(spec.input_size));
  if (spec.input_channels != 1 && spec.input_channels != 3)
    throw ConfigError("model spec: input_channels must be 1 or 3");
  if (spec.conv_channels.empty())
    throw ConfigError("model spec: need at least one conv layer");
  for (auto c : spec.conv_channels)
    if (c <= 0) throw ConfigError("model spec: conv widths must be positive");
  for (std::size_t i = 0; i < spec.pool_after.size(); ++i) {
    const std::int64_t p = spec.pool_after[i];
    if (p < 1 || p > static_cast<std::int64_t>(spec.conv_channels.size()))
      throw ConfigError("model spec: pool_after entry out of range");
    if (i > 0 && spec.pool_after[i - 1] >= p)
      throw ConfigError("model spec: pool_after must be strictly increasing");
  }
  if (spec.fc_widths.size() < 1)
    throw ConfigError("model spec: need at least one FC layer");
  for (auto w : spec.fc_widths)
    if (w <= 0) throw ConfigError("model spec: FC widths must be positive");
  if (spec.num_classes < 2)
    throw ConfigError("model spec: num_classes must be >= 2");
  if (spec.fc_widths.back() != spec.num_classes)
    throw ConfigError("model spec: last FC width must equal num_classes");
  if (spec.dropout_p < 0.0 || spec.dropout_p >= 1.0)
    throw ConfigError("model spec: dropout_p must be in [0, 1)");
}

// Flatten width after the conv stack: last conv width times the pooled
// spatial area.
inline std::int64_t flatten_width(const ModelSpec& spec) {
  const std::int64_t pools = static_cast<std::int64_t>(spec.pool_after.size());
  const std::int64_t side = spec.input_size >> pools;
  return spec.conv_channels.back() * side * side;
}

// One row of the architecture walk: layer name, output shape (per
// sample), and parameter counts. Computed arithmetically — nothing is
// allocated, so the full-scale network can be traced on any machine.
struct ShapeTraceEntry {
  std::string name;
  std::vector<std::int64_t> shape;
  std::int64_t weight_params = 0;
  std::int64_t bias_params = 0;
};

inline std::vector<ShapeTraceEntry> shape_trace(const ModelSpec& spec) {
  validate_spec(spec);
  std::vector<ShapeTraceEntry> trace;
  trace.push_back({"input", {spec.input_channels, spec.input_size,
                             spec.input_size}});
  std::int64_t side = spec.input_size;
  std::int64_t in_c = spec.input_channels;
  std::size_t pool_cursor = 0;
  std::int64_t pool_index = 0;
  for (std::size_t l = 0; l < spec.conv_channels.size(); ++l) {
    const std::int64_t out_c = spec.conv_channels[l];
    ShapeTraceEntry conv{"conv" + std::to_string(l + 1), {out_c, side, side}};
    conv.weight_params = out_c * in_c * 9;
    conv.bias_params = out_c;
    trace.push_back(std::move(conv));
    trace.push_back({"relu" + std::to_string(l + 1), {out_c, side, side}});
    if (pool_cursor < spec.pool_after.size() &&
        spec.pool_after[pool_cursor] == static_cast<std::int64_t>(l + 1)) {
      side /= 2;
      pool_index += 1;
      pool_cursor += 1;
      trace.push_back(
          {"pool" + std::to_string(pool_index), {out_c, side, side}});
    }
    in_c = out_c;
  }
  std::int64_t width = flatten_width(spec);
  trace.push_back({"flatten", {width}});
  for (std::size_t l = 0; l < spec.fc_widths.size(); ++l) {
    const std::int64_t out_w = spec.fc_widths[l];
    ShapeTraceEntry fc{"fc" + std::to_string(l + 1), {out_w}};
    fc.weight_params = width * out_w;
    fc.bias_params = out_w;
    trace.push_back(std::move(fc));
    width = out_w;
  }
  return trace;
}

// The network with its parameters: 6 conv weight/bias pairs followed by
// 3 FC weight/bias pairs, in declaration order. Parameter shapes are
// fully determined by the spec; the seed records how they were drawn.
template <typename T>
struct ModelState {
  ModelSpec spec;
  std::uint64_t seed = 0;
  std::vector<ParamTensor<T>> params;

  std::vector<ParamTensor<T>*> param_ptrs() {
    std::vector<ParamTensor<T>*> out;
    out.reserve(params.size());
    for (auto& p : params) out.push_back(&p);
    return out;
  }

  std::int64_t param_count() const {
    std::int64_t n = 0;
    for (const auto& p : params) n += p.value->numel();
    return n;
  }

  ParamTensor<T>& param(const std::string& name) {
    for (auto& p : params)
      if (p.name == name) return p;
    throw UsageError("no parameter named " + name);
  }
};

namespace detail {

// Allocates every parameter tensor (zero-filled) in declaration order.
template <typename T>
ModelState<T> allocate_model(const ModelSpec& spec, std::uint64_t seed) {
  validate_spec(spec);
  ModelState<T> m;
  m.spec = spec;
  m.seed = seed;
  std::int64_t in_c = spec.input_channels;
  for (std::size_t l = 0; l < spec.conv_channels.size(); ++l) {
    const std::int64_t out_c = spec.conv_channels[l];
    const std::string base = "conv" + std::to_string(l + 1);
    m.params.emplace_back(base + ".weight",
                          core::make_tensor<T>({out_c, in_c, 3, 3}));
    m.params.emplace_back(base + ".bias", core::make_tensor<T>({out_c}));
    in_c = out_c;
  }
  std::int64_t width = flatten_width(spec);
  for (std::size_t l = 0; l < spec.fc_widths.size(); ++l) {
    const std::int64_t out_w = spec.fc_widths[l];
    const std::string base = "fc" + std::to_string(l + 1);
    m.params.emplace_back(base + ".weight",
                          core::make_tensor<T>({width, out_w}));
    m.params.emplace_back(base + ".bias", core::make_tensor<T>({out_w}));
    width = out_w;
  }
  return m;
}

}  // namespace detail

// He-normal initialization: weight std = sqrt(2 / fan_in), biases zero.
// The final classifier layer starts at zero instead: after six ReLU conv
// layers and three max pools the feature norm is large enough that
// He-scaled final weights give initial logits with std near 1, pushing
// the initial loss several percent above ln(num_classes) and skewing the
// initial softmax far from uniform. Zero final weights make the initial
// logits exactly zero — loss ln(C), uniform softmax — while its gradient
// (features times the residual) is immediately nonzero. A single
// generator drawn in declaration order makes the result a pure function
// of (spec, seed).
template <typename T>
ModelState<T> build_model(const ModelSpec& spec, std::uint64_t seed) {
  ModelState<T> m = detail::allocate_model<T>(spec, seed);
  core::Rng rng(seed);
  const std::string last_fc =
      "fc" + std::to_string(spec.fc_widths.size()) + ".weight";
  for (auto& p : m.params) {
    if (p.name.find(".bias") != std::string::npos) continue;  // stays zero
    if (p.name == last_fc) continue;                          // stays zero
    const auto& shape = p.value->shape();
    // conv [out,in,3,3] -> fan_in = in*9; fc [in,out] -> fan_in = in
    const std::int64_t fan_in = shape.size() == 4
                                    ? shape[1] * shape[2] * shape[3]
                                    : shape[0];
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : p.value->values())
      v = static_cast<T>(std_dev * rng.normal());
  }
  return m;
}

template <typename T>
using CaptureMap = std::map<std::string, TensorPtr<T>>;

namespace detail {

template <typename T>
void maybe_capture(CaptureMap<T>* capture,
                   const std::set<std::string>* tags, const std::string& tag,
                   const TensorPtr<T>& value) {
  if (!capture || !tags || tags->find(tag) == tags->end()) return;
  auto copy = core::make_tensor<T>(value->shape());
  copy->values() = value->values();
  (*capture)[tag] = std::move(copy);
}

inline void check_capture_tags(const ModelSpec& spec,
                               const std::set<std::string>* tags) {
  if (!tags) return;
  std::set<std::string> valid = {"flatten", "logits"};
  for (std::size_t l = 1; l <= spec.conv_channels.size(); ++l) {
    valid.insert("conv" + std::to_string(l));
    valid.insert("relu" + std::to_string(l));
  }
  for (std::size_t p = 1; p <= spec.pool_after.size(); ++p)
    valid.insert("pool" + std::to_string(p));
  // the last FC has no post-ReLU activation; its output is tagged "logits"
  for (std::size_t l = 1; l < spec.fc_widths.size(); ++l)
    valid.insert("fc" + std::to_string(l));
  for (const auto& t : *tags)
    if (valid.find(t) == valid.end())
      throw ConfigError("unknown layer tag: " + t);
}

}  // namespace detail

// Runs the network: conv->relu pairs with pools after the configured conv
// layers, flatten, then FC->relu->dropout for all but the last FC, which
// emits raw logits. Dropout is active only when training; its masks are
// derived from (dropout_seed, site) so a batch's draw is reproducible.
// When `capture`/`tags` are given, copies of the tagged activations are
// stored; capturing never alters the computation.
template <typename T>
TensorPtr<T> forward(Tape<T>& tape, ModelState<T>& m, const TensorPtr<T>& x,
                     bool training, std::uint64_t dropout_seed = 0,
                     CaptureMap<T>* capture = nullptr,
                     const std::set<std::string>* tags = nullptr) {
  const ModelSpec& spec = m.spec;
  detail::check_capture_tags(spec, tags);
  if (x->ndim() != 4 || x->dim(1) != spec.input_channels ||
      x->dim(2) != spec.input_size || x->dim(3) != spec.input_size)
    throw PreconditionError(
        "forward: input must be [N," + std::to_string(spec.input_channels) +
        "," + std::to_string(spec.input_size) + "," +
        std::to_string(spec.input_size) + "], got " +
        core::shape_str(x->shape()));

  TensorPtr<T> h = x;
  std::size_t pool_cursor = 0;
  std::int64_t pool_index = 0;
  for (std::size_t l = 0; l < spec.conv_channels.size(); ++l) {
    const std::string base = "conv" + std::to_string(l + 1);
    auto& w = m.param(base + ".weight");
    auto& b = m.param(base + ".bias");
    h = core::conv2d(tape, h, w.value, b.value, /*pad=*/1);
    detail::maybe_capture(capture, tags, base, h);
    h = core::relu(tape, h);
    detail::maybe_capture(capture, tags, "relu" + std::to_string(l + 1), h);
    if (pool_cursor < spec.pool_after.size() &&
        spec.pool_after[pool_cursor] == static_cast<std::int64_t>(l + 1)) {
      h = core::maxpool2(tape, h);
      pool_index += 1;
      pool_cursor += 1;
      detail::maybe_capture(capture, tags, "pool" + std::to_string(pool_index),
                            h);
    }
  }
  h = core::flatten(tape, h);
  detail::maybe_capture(capture, tags, "flatten", h);
  for (std::size_t l = 0; l < spec.fc_widths.size(); ++l) {
    const std::string base = "fc" + std::to_string(l + 1);
    auto& w = m.param(base + ".weight");
    auto& b = m.param(base + ".bias");
    h = core::linear(tape, h, w.value, b.value);
    if (l + 1 < spec.fc_widths.size()) {
      h = core::relu(tape, h);
      detail::maybe_capture(capture, tags, base, h);
      h = core::dropout(tape, h, spec.dropout_p, training,
                        core::hash_combine(dropout_seed,
                                           static_cast<std::uint64_t>(l + 1)));
    }
  }
  detail::maybe_capture(capture, tags, "logits", h);
  return h;
}

// Feature extractor: activations at one of the taps `flatten` (pre-FC,
// no ReLU), `fc1` or `fc2` (post-ReLU), with dropout disabled. Returns an
// [N, D] matrix.
template <typename T>
TensorPtr<T> extract_features(ModelState<T>& m, const TensorPtr<T>& images,
                              const std::string& tap) {
  if (tap != "flatten" && tap != "fc1" && tap != "fc2")
    throw ConfigError("unknown feature tap: " + tap +
                      " (want flatten|fc1|fc2)");
  Tape<T> tape(/*recording=*/false);
  CaptureMap<T> capture;
  const std::set<std::string> tags = {tap};
  forward(tape, m, images, /*training=*/false, /*dropout_seed=*/0, &capture,
          &tags);
  auto it = capture.find(tap);
  if (it == capture.end())
    throw ConfigError("feature tap " + tap +
                      " is not present in this architecture");
  return it->second;
}

}  // namespace adinkra::cnn
