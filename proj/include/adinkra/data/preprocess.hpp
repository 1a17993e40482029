#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "adinkra/core/tensor.hpp"
#include "adinkra/data/dataset.hpp"

namespace adinkra::data {

// Bilinear sample of one channel at continuous source coordinates using
// the half-pixel convention: dst center d maps to (d + 0.5) * scale - 0.5,
// with edge clamping. Identity when sizes match, and corners of an
// upsampled image reproduce corner pixels exactly.
template <typename T>
void bilinear_resize_channel(const T* src, std::int64_t src_h,
                             std::int64_t src_w, T* dst, std::int64_t dst_h,
                             std::int64_t dst_w) {
  const double sy = static_cast<double>(src_h) / static_cast<double>(dst_h);
  const double sx = static_cast<double>(src_w) / static_cast<double>(dst_w);
  for (std::int64_t y = 0; y < dst_h; ++y) {
    double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
    if (fy < 0) fy = 0;
    if (fy > static_cast<double>(src_h - 1)) fy = static_cast<double>(src_h - 1);
    const std::int64_t y0 = static_cast<std::int64_t>(fy);
    const std::int64_t y1 = y0 + 1 < src_h ? y0 + 1 : src_h - 1;
    const double wy = fy - static_cast<double>(y0);
    for (std::int64_t x = 0; x < dst_w; ++x) {
      double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
      if (fx < 0) fx = 0;
      if (fx > static_cast<double>(src_w - 1))
        fx = static_cast<double>(src_w - 1);
      const std::int64_t x0 = static_cast<std::int64_t>(fx);
      const std::int64_t x1 = x0 + 1 < src_w ? x0 + 1 : src_w - 1;
      const double wx = fx - static_cast<double>(x0);
      const double top = static_cast<double>(src[y0 * src_w + x0]) * (1 - wx) +
                         static_cast<double>(src[y0 * src_w + x1]) * wx;
      const double bot = static_cast<double>(src[y1 * src_w + x0]) * (1 - wx) +
                         static_cast<double>(src[y1 * src_w + x1]) * wx;
      dst[y * dst_w + x] = static_cast<T>(top * (1 - wy) + bot * wy);
    }
  }
}

// Image -> network input: bilinear resize to size x size, scale to [0,1]
// by /255, grayscale replicated to three channels, layout C x H x W.
// Writes into `out` (size 3*size*size); the tensor-building overload
// below is the usual entry point.
template <typename T>
void preprocess_into(const LabeledImage& img, std::int64_t size, T* out) {
  if (img.height <= 0 || img.width <= 0)
    throw InputError("preprocess: empty image" +
                     (img.source_path.empty() ? std::string()
                                              : " " + img.source_path));
  if (img.channels != 1 && img.channels != 3)
    throw InputError("preprocess: unsupported channel count " +
                     std::to_string(img.channels));
  const std::int64_t hw = img.height * img.width;
  std::vector<T> plane(static_cast<std::size_t>(hw));
  for (std::int64_t c = 0; c < 3; ++c) {
    const std::int64_t src_c = img.channels == 1 ? 0 : c;
    for (std::int64_t p = 0; p < hw; ++p)
      plane[static_cast<std::size_t>(p)] = static_cast<T>(
          img.pixels[static_cast<std::size_t>(p * img.channels + src_c)]);
    bilinear_resize_channel(plane.data(), img.height, img.width,
                            out + c * size * size, size, size);
  }
  // Division, not multiplication by a rounded reciprocal: 255/255 must be
  // exactly 1 so full-brightness pixels map to 1.0 and the [0,1] bound is
  // tight.
  const std::int64_t count = 3 * size * size;
  for (std::int64_t i = 0; i < count; ++i) out[i] /= static_cast<T>(255);
}

template <typename T>
adinkra::core::TensorPtr<T> preprocess(const LabeledImage& img,
                                       std::int64_t size) {
  auto t = adinkra::core::make_tensor<T>({3, size, size});
  preprocess_into(img, size, t->data());
  return t;
}

}  // namespace adinkra::data
