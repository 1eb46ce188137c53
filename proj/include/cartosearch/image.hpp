#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cartosearch {

/// 8-bit interleaved RGB raster.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};

/// Decodes any format OpenCV's imgcodecs understands (JPEG, PNG, TIFF, ...).
/// Grayscale and alpha inputs are converted to RGB. Throws Error(kImageDecode).
Raster decode_image(std::span<const std::uint8_t> bytes);

/// Nearest-neighbour resample to the given width, aspect preserved
/// (height rounded half up, at least 1).
Raster resize_to_width(const Raster& src, int width);

/// Binary PPM (P6). Used as the canonical lossless form for hashing.
std::string to_ppm(const Raster& raster);

/// PNG bytes for fixtures and test servers.
std::vector<std::uint8_t> encode_png(const Raster& raster);
std::vector<std::uint8_t> encode_jpeg(const Raster& raster, int quality = 95);

}  // namespace cartosearch
