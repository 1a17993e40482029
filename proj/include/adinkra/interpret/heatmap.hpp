#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "adinkra/cnn/model.hpp"
#include "adinkra/core/tensor.hpp"
#include "adinkra/data/dataset.hpp"
#include "adinkra/data/image_io.hpp"

// Activation-based saliency: pull feature maps out of a forward pass,
// aggregate them into a per-pixel heatmap aligned with the network input,
// and blend that heatmap over the original image for inspection.

namespace adinkra::interpret {

// One layer's feature maps, copied out of a single forward pass. The copy
// is taken at capture time, so later computation (or reuse of the tape)
// never changes it.
struct ActivationCapture {
  std::string tag;  // conv1..convN, relu1..reluN, pool1..poolP
  std::int64_t channels = 0;
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<float> maps;  // [channels, height, width], row-major
};

// Per-pixel saliency over the preprocessed input: size x size values in
// [0,1]. A nonzero map attains exactly 1 somewhere; an identically-zero
// map stays zero.
struct Heatmap {
  std::string tag;
  std::int64_t size = 0;
  std::vector<float> values;  // [size, size], row-major
};

// Runs one inference-mode forward pass over a single image tensor
// [1, C, S, S] and returns copies of the tagged activations, in the order
// the tags were given (duplicates repeat). Only spatial feature-map tags
// are accepted: conv/relu per conv layer and pool per pooling stage.
// Capturing never changes the computation: logits with and without
// captures are bit-identical.
//
// Errors: ConfigError for a tag that is unknown or has no spatial feature
// maps (flatten and the FC stages); PreconditionError for a batch that is
// not a single image.
std::vector<ActivationCapture> capture(cnn::ModelState<float>& model,
                                       const core::TensorPtr<float>& image,
                                       const std::vector<std::string>& tags);

// Aggregates a capture into a Heatmap: channelwise mean, then ReLU, then
// bilinear upsampling (half-pixel centres, edge clamped) to
// input_size x input_size, then min-max normalization to [0,1]. An
// identically-zero rectified map stays zero; a nonzero constant map
// normalizes to all ones. The result is invariant under scaling of the
// capture by any positive constant (bit-exact for powers of two).
Heatmap heatmap(const ActivationCapture& capture, std::int64_t input_size);

// The fixed 256-entry jet palette used for all rendering: entry i is the
// {r, g, b} colour of intensity i/255, from the classic piecewise-linear
// jet ramp (dark blue through cyan, yellow, red).
const std::array<std::array<std::uint8_t, 3>, 256>& jet_palette();

// Resizes the heatmap to height x width (bilinear, half-pixel centres)
// and maps each value through the jet palette. Returns an RGB image.
data::RawImage colormapped(const Heatmap& hm, std::int64_t height,
                           std::int64_t width);

// Per-pixel blend: out = (1-alpha) * original + alpha * colormapped(hm),
// clamped to [0,255]. The heatmap is resized to the original's
// dimensions; a grayscale original is replicated to RGB. alpha = 0
// returns the original bit-exactly; alpha = 1 returns the colormapped
// heatmap. Errors: PreconditionError unless 0 <= alpha <= 1.
data::RawImage overlay(const data::LabeledImage& original, const Heatmap& hm,
                       double alpha = 0.4);

// Writes a side-by-side triptych PNG: original | colormapped heatmap |
// overlay, each panel at the original's dimensions, separated by fixed
// 8-pixel gutters, under a 16-pixel header strip showing the layer tag.
// Canvas: width = 3*W + 4*8, height = H + 16 + 2*8. The overlaid image
// must already match the original's dimensions. Errors: IoError when the
// path cannot be written (no partial file is left behind);
// PreconditionError on dimension mismatches.
void render_panel(const data::LabeledImage& original, const Heatmap& hm,
                  const data::RawImage& overlaid, const std::string& tag,
                  const std::string& path);

}  // namespace adinkra::interpret
