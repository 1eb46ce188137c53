#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cartosearch {

/// Unit-norm float vector in the shared text/image space.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;

  /// Wraps values that are already unit-norm (within 1e-4). Throws
  /// Error(kDegenerateVector) otherwise; use normalize() for raw vectors.
  static EmbeddingVector from_unit(std::vector<float> values);

  std::span<const float> values() const noexcept { return values_; }
  std::size_t dim() const noexcept { return values_.size(); }
  float operator[](std::size_t i) const noexcept { return values_[i]; }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  explicit EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {}
  friend EmbeddingVector normalize(std::span<const float> raw);

  std::vector<float> values_;
};

inline constexpr double kUnitNormTolerance = 1e-4;

double l2_norm(std::span<const float> v) noexcept;

/// v / ||v||. Throws Error(kDegenerateVector) for zero or non-finite input.
EmbeddingVector normalize(std::span<const float> raw);

enum class EmbedderBackend { kDeterministicTest, kExternalAdapter };

struct EmbedderConfig {
  std::size_t dim = 512;
  EmbedderBackend backend = EmbedderBackend::kDeterministicTest;
  std::uint64_t seed = 0;
  int image_width_px = 2000;

  /// Throws Error(kConfig) when dim or image_width_px is not positive.
  void validate() const;
};

// -- external adapter boundary ---------------------------------------------

struct AdapterRequest {
  enum class Kind { kText, kImage };
  Kind kind;
  /// UTF-8 text, or raw image bytes.
  std::string payload;
};

/// Opaque callable standing in for an external model. Returns a raw float
/// vector; the embedder normalizes and dimension-checks it.
using EmbeddingAdapter = std::function<std::vector<float>(const AdapterRequest&)>;

/// {"kind": "text"|"image", "payload": <utf-8 | base64>}
std::string adapter_request_json(const AdapterRequest& request);
/// Parses {"values": [...]}. Throws Error(kAdapter) on malformed bodies.
std::vector<float> parse_adapter_response(std::string_view body);

/// Adapter that POSTs the JSON request to endpoint_url and reads the reply.
EmbeddingAdapter make_http_adapter(std::string endpoint_url,
                                   std::chrono::milliseconds timeout = std::chrono::seconds(30));

// -- embedder ----------------------------------------------------------------

/// Thread-safe; configuration is fixed at construction.
class Embedder {
 public:
  explicit Embedder(EmbedderConfig config, EmbeddingAdapter adapter = {});

  /// Throws Error(kInvalidQuery) for empty or whitespace-only text.
  EmbeddingVector encode_text(std::string_view text) const;
  /// Accepts any decodable raster at any resolution. Throws
  /// Error(kImageDecode) when the bytes do not decode.
  EmbeddingVector encode_image(std::span<const std::uint8_t> bytes) const;
  EmbeddingVector encode_image(std::string_view bytes) const;

  const EmbedderConfig& config() const noexcept { return config_; }

 private:
  EmbeddingVector from_adapter(const AdapterRequest& request) const;

  EmbedderConfig config_;
  EmbeddingAdapter adapter_;
};

// Free-function forms over a test-backend embedder.
EmbeddingVector encode_text(std::string_view text, const EmbedderConfig& config);
EmbeddingVector encode_image(std::span<const std::uint8_t> bytes, const EmbedderConfig& config);

}  // namespace cartosearch
