#include "cartosearch/image.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cstring>

#include "cartosearch/error.hpp"

namespace cartosearch {

Raster decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw Error(ErrorCode::kImageDecode, "empty image buffer");
  cv::Mat decoded;
  try {
    const cv::Mat buffer(1, static_cast<int>(bytes.size()), CV_8UC1,
                         const_cast<std::uint8_t*>(bytes.data()));
    decoded = cv::imdecode(buffer, cv::IMREAD_COLOR);
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::kImageDecode, std::string("image decode failed: ") + e.what());
  }
  if (decoded.empty() || decoded.cols <= 0 || decoded.rows <= 0) {
    throw Error(ErrorCode::kImageDecode, "bytes are not a decodable raster image");
  }
  cv::Mat rgb;
  cv::cvtColor(decoded, rgb, cv::COLOR_BGR2RGB);

  Raster out;
  out.width = rgb.cols;
  out.height = rgb.rows;
  out.rgb.resize(static_cast<std::size_t>(out.width) * out.height * 3);
  const std::size_t row_bytes = static_cast<std::size_t>(out.width) * 3;
  for (int y = 0; y < out.height; ++y) {
    std::memcpy(out.rgb.data() + y * row_bytes, rgb.ptr<std::uint8_t>(y), row_bytes);
  }
  return out;
}

Raster resize_to_width(const Raster& src, int width) {
  if (width <= 0) throw Error(ErrorCode::kConfig, "target width must be positive");
  if (src.width == width) return src;

  const std::int64_t sw = src.width;
  const std::int64_t sh = src.height;
  const std::int64_t dw = width;
  const std::int64_t dh = std::max<std::int64_t>(1, (2 * sh * dw + sw) / (2 * sw));

  // Pixel centres: source index = floor((2x + 1) * s / (2d)).
  std::vector<std::int64_t> xs(static_cast<std::size_t>(dw));
  for (std::int64_t x = 0; x < dw; ++x) xs[x] = std::min(sw - 1, ((2 * x + 1) * sw) / (2 * dw));

  Raster out;
  out.width = static_cast<int>(dw);
  out.height = static_cast<int>(dh);
  out.rgb.resize(static_cast<std::size_t>(dw * dh * 3));
  for (std::int64_t y = 0; y < dh; ++y) {
    const std::int64_t sy = std::min(sh - 1, ((2 * y + 1) * sh) / (2 * dh));
    const std::uint8_t* src_row = src.rgb.data() + sy * sw * 3;
    std::uint8_t* dst_row = out.rgb.data() + y * dw * 3;
    for (std::int64_t x = 0; x < dw; ++x) {
      std::memcpy(dst_row + 3 * x, src_row + 3 * xs[x], 3);
    }
  }
  return out;
}

std::string to_ppm(const Raster& raster) {
  std::string header = "P6\n" + std::to_string(raster.width) + " " +
                       std::to_string(raster.height) + "\n255\n";
  std::string out;
  out.reserve(header.size() + raster.rgb.size());
  out += header;
  out.append(reinterpret_cast<const char*>(raster.rgb.data()), raster.rgb.size());
  return out;
}

namespace {

std::vector<std::uint8_t> encode_with(const Raster& raster, const std::string& ext,
                                      const std::vector<int>& params) {
  cv::Mat rgb(raster.height, raster.width, CV_8UC3, const_cast<std::uint8_t*>(raster.rgb.data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  std::vector<std::uint8_t> out;
  if (!cv::imencode(ext, bgr, out, params)) {
    throw Error(ErrorCode::kImageDecode, "image encode failed for " + ext);
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Raster& raster) {
  return encode_with(raster, ".png", {});
}

std::vector<std::uint8_t> encode_jpeg(const Raster& raster, int quality) {
  return encode_with(raster, ".jpg", {cv::IMWRITE_JPEG_QUALITY, quality});
}

}  // namespace cartosearch
