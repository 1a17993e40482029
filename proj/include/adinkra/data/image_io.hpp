#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adinkra/core/error.hpp"

namespace adinkra::data {

// Raw decoded image: row-major H x W x C interleaved 8-bit samples,
// C is 1 (grayscale) or 3 (RGB).
struct RawImage {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::int64_t channels = 0;
  std::vector<std::uint8_t> pixels;
};

// Decodes a PNG or JPEG file, chosen by content sniffing. 16-bit and
// palette PNGs are expanded, alpha is dropped. Throws InputError on
// unreadable or undecodable files.
RawImage decode_image(const std::string& path);

// Writes 8-bit grayscale (c=1) or RGB (c=3) pixels as a PNG. Throws
// IoError when the file cannot be written.
void encode_png(const std::string& path, const std::uint8_t* pixels,
                std::int64_t height, std::int64_t width, std::int64_t channels);

}  // namespace adinkra::data
