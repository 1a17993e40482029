#include "adinkra/interpret/heatmap.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "adinkra/core/error.hpp"
#include "adinkra/core/tape.hpp"

namespace adinkra::interpret {

namespace {

// Accepts convN / reluN / poolP with an index valid for this architecture.
void check_feature_map_tag(const cnn::ModelSpec& spec, const std::string& tag) {
  const auto parse_index = [&](std::size_t prefix_len) {
    const auto digits = tag.substr(prefix_len);
    if (digits.empty() ||
        digits.find_first_not_of("0123456789") != std::string::npos)
      return std::int64_t{-1};
    return static_cast<std::int64_t>(std::stoll(digits));
  };
  if (tag.rfind("conv", 0) == 0 || tag.rfind("relu", 0) == 0) {
    const auto index = parse_index(4);
    if (index >= 1 &&
        index <= static_cast<std::int64_t>(spec.conv_channels.size()))
      return;
  } else if (tag.rfind("pool", 0) == 0) {
    const auto index = parse_index(4);
    if (index >= 1 &&
        index <= static_cast<std::int64_t>(spec.pool_after.size()))
      return;
  } else if (tag == "flatten" || tag == "logits" || tag.rfind("fc", 0) == 0) {
    throw ConfigError("layer tag has no spatial feature maps: " + tag);
  }
  throw ConfigError("unknown layer tag: " + tag);
}

// Bilinear resize with half-pixel centres and edge clamping.
std::vector<double> resize_bilinear(const std::vector<double>& src,
                                    std::int64_t src_h, std::int64_t src_w,
                                    std::int64_t dst_h, std::int64_t dst_w) {
  std::vector<double> out(static_cast<std::size_t>(dst_h * dst_w));
  const double sy = static_cast<double>(src_h) / static_cast<double>(dst_h);
  const double sx = static_cast<double>(src_w) / static_cast<double>(dst_w);
  for (std::int64_t y = 0; y < dst_h; ++y) {
    double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
    fy = std::min(std::max(fy, 0.0), static_cast<double>(src_h - 1));
    const auto y0 = static_cast<std::int64_t>(fy);
    const auto y1 = std::min(y0 + 1, src_h - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::int64_t x = 0; x < dst_w; ++x) {
      double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
      fx = std::min(std::max(fx, 0.0), static_cast<double>(src_w - 1));
      const auto x0 = static_cast<std::int64_t>(fx);
      const auto x1 = std::min(x0 + 1, src_w - 1);
      const double wx = fx - static_cast<double>(x0);
      const double top = (1.0 - wx) * src[y0 * src_w + x0] +
                         wx * src[y0 * src_w + x1];
      const double bottom = (1.0 - wx) * src[y1 * src_w + x0] +
                            wx * src[y1 * src_w + x1];
      out[y * dst_w + x] = (1.0 - wy) * top + wy * bottom;
    }
  }
  return out;
}

std::uint8_t clamp_byte(double v) {
  return static_cast<std::uint8_t>(
      std::min(std::max(std::lround(v), 0L), 255L));
}

std::array<std::uint8_t, 3> jet_colour(double v) {
  const auto index = static_cast<std::size_t>(
      std::min(std::max(std::lround(v * 255.0), 0L), 255L));
  return jet_palette()[index];
}

// 5x7 uppercase + digit glyphs; each byte is one row, bit 4 the leftmost
// column. Used only for the panel header text.
constexpr std::uint8_t kGlyphs[36][7] = {
    {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},  // A
    {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},  // B
    {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E},  // C
    {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E},  // D
    {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F},  // E
    {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},  // F
    {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F},  // G
    {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},  // H
    {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E},  // I
    {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},  // J
    {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11},  // K
    {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},  // L
    {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11},  // M
    {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11},  // N
    {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E},  // O
    {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},  // P
    {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D},  // Q
    {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},  // R
    {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E},  // S
    {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},  // T
    {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E},  // U
    {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},  // V
    {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A},  // W
    {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},  // X
    {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04},  // Y
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F},  // Z
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},  // 2
    {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},  // 3
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
};

const std::uint8_t* glyph_for(char c) {
  const auto upper = static_cast<char>(
      std::toupper(static_cast<unsigned char>(c)));
  if (upper >= 'A' && upper <= 'Z') return kGlyphs[upper - 'A'];
  if (upper >= '0' && upper <= '9') return kGlyphs[26 + (upper - '0')];
  return nullptr;  // unknown characters render as a blank advance
}

void draw_text(std::vector<std::uint8_t>& canvas, std::int64_t canvas_w,
               std::int64_t x, std::int64_t y, const std::string& text) {
  for (const char c : text) {
    if (const auto* glyph = glyph_for(c)) {
      for (int row = 0; row < 7; ++row)
        for (int col = 0; col < 5; ++col)
          if (glyph[row] & (0x10 >> col)) {
            const auto at = ((y + row) * canvas_w + x + col) * 3;
            canvas[at] = canvas[at + 1] = canvas[at + 2] = 0;
          }
    }
    x += 6;  // 5-pixel glyph plus 1-pixel spacing
  }
}

void blit_rgb(std::vector<std::uint8_t>& canvas, std::int64_t canvas_w,
              std::int64_t x, std::int64_t y, const data::RawImage& panel) {
  for (std::int64_t row = 0; row < panel.height; ++row)
    for (std::int64_t col = 0; col < panel.width; ++col)
      for (std::int64_t c = 0; c < 3; ++c)
        canvas[((y + row) * canvas_w + x + col) * 3 + c] =
            panel.pixels[(row * panel.width + col) * 3 + c];
}

data::RawImage to_rgb(const data::LabeledImage& image) {
  if (image.channels != 1 && image.channels != 3)
    throw PreconditionError("overlay: image must be grayscale or RGB");
  if (image.height < 1 || image.width < 1)
    throw PreconditionError("overlay: empty image");
  data::RawImage out;
  out.height = image.height;
  out.width = image.width;
  out.channels = 3;
  out.pixels.resize(static_cast<std::size_t>(image.height * image.width * 3));
  for (std::int64_t i = 0; i < image.height * image.width; ++i)
    for (std::int64_t c = 0; c < 3; ++c)
      out.pixels[i * 3 + c] =
          image.pixels[image.channels == 1 ? i : i * 3 + c];
  return out;
}

void check_heatmap(const Heatmap& hm) {
  if (hm.size < 1 ||
      hm.values.size() != static_cast<std::size_t>(hm.size * hm.size))
    throw PreconditionError("heatmap size does not match its values");
}

}  // namespace

std::vector<ActivationCapture> capture(cnn::ModelState<float>& model,
                                       const core::TensorPtr<float>& image,
                                       const std::vector<std::string>& tags) {
  for (const auto& tag : tags) check_feature_map_tag(model.spec, tag);
  if (image->ndim() != 4 || image->dim(0) != 1)
    throw PreconditionError("capture: expected a single image [1,C,S,S]");

  core::Tape<float> tape;
  cnn::CaptureMap<float> captured;
  const std::set<std::string> tag_set(tags.begin(), tags.end());
  cnn::forward(tape, model, image, /*training=*/false, /*dropout_seed=*/0,
               &captured, &tag_set);

  std::vector<ActivationCapture> out;
  for (const auto& tag : tags) {
    const auto& tensor = captured.at(tag);
    ActivationCapture ac;
    ac.tag = tag;
    ac.channels = tensor->dim(1);
    ac.height = tensor->dim(2);
    ac.width = tensor->dim(3);
    ac.maps = tensor->values();
    out.push_back(std::move(ac));
  }
  return out;
}

Heatmap heatmap(const ActivationCapture& capture, std::int64_t input_size) {
  if (capture.channels < 1 || capture.height < 1 || capture.width < 1 ||
      capture.maps.size() != static_cast<std::size_t>(capture.channels *
                                                      capture.height *
                                                      capture.width))
    throw PreconditionError("heatmap: empty or inconsistent capture");
  if (input_size < 1)
    throw PreconditionError("heatmap: input size must be positive");

  // Channelwise mean, rectified.
  const auto plane = capture.height * capture.width;
  std::vector<double> mean(static_cast<std::size_t>(plane), 0.0);
  for (std::int64_t c = 0; c < capture.channels; ++c)
    for (std::int64_t i = 0; i < plane; ++i)
      mean[i] += static_cast<double>(capture.maps[c * plane + i]);
  for (auto& v : mean) {
    v /= static_cast<double>(capture.channels);
    v = v > 0.0 ? v : 0.0;
  }

  auto up = resize_bilinear(mean, capture.height, capture.width, input_size,
                            input_size);

  double lo = up[0], hi = up[0];
  for (const auto v : up) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  Heatmap hm;
  hm.tag = capture.tag;
  hm.size = input_size;
  hm.values.resize(up.size());
  if (hi == 0.0) {
    // Fully rectified away: stays zero.
  } else if (hi == lo) {
    std::fill(hm.values.begin(), hm.values.end(), 1.0f);
  } else {
    for (std::size_t i = 0; i < up.size(); ++i)
      hm.values[i] = static_cast<float>((up[i] - lo) / (hi - lo));
  }
  return hm;
}

const std::array<std::array<std::uint8_t, 3>, 256>& jet_palette() {
  static const auto table = [] {
    std::array<std::array<std::uint8_t, 3>, 256> t{};
    for (int i = 0; i < 256; ++i) {
      const double x = static_cast<double>(i) / 255.0;
      const auto ramp = [](double v) {
        return std::min(std::max(v, 0.0), 1.0) * 255.0;
      };
      t[i][0] = clamp_byte(ramp(1.5 - std::abs(4.0 * x - 3.0)));
      t[i][1] = clamp_byte(ramp(1.5 - std::abs(4.0 * x - 2.0)));
      t[i][2] = clamp_byte(ramp(1.5 - std::abs(4.0 * x - 1.0)));
    }
    return t;
  }();
  return table;
}

data::RawImage colormapped(const Heatmap& hm, std::int64_t height,
                           std::int64_t width) {
  check_heatmap(hm);
  if (height < 1 || width < 1)
    throw PreconditionError("colormapped: empty target size");
  std::vector<double> values(hm.values.begin(), hm.values.end());
  const auto resized = resize_bilinear(values, hm.size, hm.size, height,
                                       width);
  data::RawImage out;
  out.height = height;
  out.width = width;
  out.channels = 3;
  out.pixels.resize(static_cast<std::size_t>(height * width * 3));
  for (std::int64_t i = 0; i < height * width; ++i) {
    const auto rgb = jet_colour(resized[i]);
    out.pixels[i * 3 + 0] = rgb[0];
    out.pixels[i * 3 + 1] = rgb[1];
    out.pixels[i * 3 + 2] = rgb[2];
  }
  return out;
}

data::RawImage overlay(const data::LabeledImage& original, const Heatmap& hm,
                       double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw PreconditionError("overlay: alpha must be in [0,1]");
  check_heatmap(hm);
  auto base = to_rgb(original);
  const auto colours = colormapped(hm, original.height, original.width);
  for (std::size_t i = 0; i < base.pixels.size(); ++i) {
    const double blended =
        (1.0 - alpha) * static_cast<double>(base.pixels[i]) +
        alpha * static_cast<double>(colours.pixels[i]);
    base.pixels[i] = clamp_byte(blended);
  }
  return base;
}

void render_panel(const data::LabeledImage& original, const Heatmap& hm,
                  const data::RawImage& overlaid, const std::string& tag,
                  const std::string& path) {
  const auto base = to_rgb(original);
  if (overlaid.height != base.height || overlaid.width != base.width ||
      overlaid.channels != 3)
    throw PreconditionError(
        "render_panel: overlay must match the original's dimensions");
  const auto colours = colormapped(hm, base.height, base.width);

  constexpr std::int64_t kGutter = 8;
  constexpr std::int64_t kHeader = 16;
  const auto width = 3 * base.width + 4 * kGutter;
  const auto height = base.height + kHeader + 2 * kGutter;
  std::vector<std::uint8_t> canvas(static_cast<std::size_t>(width * height * 3),
                                   230);

  draw_text(canvas, width, kGutter, 4, tag);
  const auto top = kHeader + kGutter;
  blit_rgb(canvas, width, kGutter, top, base);
  blit_rgb(canvas, width, 2 * kGutter + base.width, top, colours);
  blit_rgb(canvas, width, 3 * kGutter + 2 * base.width, top, overlaid);

  data::encode_png(path, canvas.data(), height, width, 3);
}

}  // namespace adinkra::interpret
