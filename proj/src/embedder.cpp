#include "cartosearch/embedder.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>

#include "cartosearch/error.hpp"
#include "cartosearch/hashing.hpp"
#include "cartosearch/iiif.hpp"
#include "cartosearch/image.hpp"

namespace cartosearch {

double l2_norm(std::span<const float> v) noexcept {
  double sum = 0.0;
  for (float x : v) sum += static_cast<double>(x) * x;
  return std::sqrt(sum);
}

EmbeddingVector normalize(std::span<const float> raw) {
  if (raw.empty()) throw Error(ErrorCode::kDegenerateVector, "cannot normalize an empty vector");
  const double norm = l2_norm(raw);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::kDegenerateVector, "cannot normalize a zero or non-finite vector");
  }
  std::vector<float> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(raw[i]) / norm);
  }
  return EmbeddingVector(std::move(out));
}

EmbeddingVector EmbeddingVector::from_unit(std::vector<float> values) {
  const double norm = l2_norm(values);
  if (values.empty() || !(std::abs(norm - 1.0) < kUnitNormTolerance)) {
    throw Error(ErrorCode::kDegenerateVector,
                "vector is not unit-norm (norm " + std::to_string(norm) + ")");
  }
  return EmbeddingVector(std::move(values));
}

void EmbedderConfig::validate() const {
  if (dim < 1) throw Error(ErrorCode::kConfig, "embedding dim must be >= 1");
  if (image_width_px < 1) throw Error(ErrorCode::kConfig, "image_width_px must be >= 1");
}

// -- adapter wire format -----------------------------------------------------

std::string adapter_request_json(const AdapterRequest& request) {
  nlohmann::json body;
  if (request.kind == AdapterRequest::Kind::kText) {
    body["kind"] = "text";
    body["payload"] = request.payload;
  } else {
    body["kind"] = "image";
    body["payload"] = base64_encode(std::span(
        reinterpret_cast<const std::uint8_t*>(request.payload.data()), request.payload.size()));
  }
  return body.dump();
}

std::vector<float> parse_adapter_response(std::string_view body) {
  const auto doc = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("values") ||
      !doc["values"].is_array()) {
    throw Error(ErrorCode::kAdapter, "adapter response must be an object with a 'values' array");
  }
  std::vector<float> values;
  values.reserve(doc["values"].size());
  for (const auto& v : doc["values"]) {
    if (!v.is_number()) throw Error(ErrorCode::kAdapter, "adapter returned a non-numeric value");
    values.push_back(v.get<float>());
  }
  return values;
}

EmbeddingAdapter make_http_adapter(std::string endpoint_url, std::chrono::milliseconds timeout) {
  const auto url = parse_url(endpoint_url);
  if (!url) throw Error(ErrorCode::kConfig, "invalid adapter endpoint: " + endpoint_url);
  return [url = *url, timeout](const AdapterRequest& request) {
    httplib::Client client(url.origin());
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    auto res = client.Post(url.path_and_query, adapter_request_json(request), "application/json");
    if (!res) {
      throw Error(ErrorCode::kAdapter, "adapter request failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw Error(ErrorCode::kAdapter, "adapter returned HTTP " + std::to_string(res->status));
    }
    return parse_adapter_response(res->body);
  };
}

// -- test backend --------------------------------------------------------------

namespace {

std::uint64_t derive_key(std::string_view domain, std::string_view bytes, std::uint64_t seed) {
  Sha256 h;
  h.update(domain);
  h.update(std::string_view("\0", 1));
  h.update(bytes);
  std::uint8_t seed_le[8];
  for (int i = 0; i < 8; ++i) seed_le[i] = static_cast<std::uint8_t>(seed >> (8 * i));
  h.update(std::span<const std::uint8_t>(seed_le, 8));
  const auto digest = h.finish();
  std::uint64_t key = 0;
  for (int i = 0; i < 8; ++i) key |= static_cast<std::uint64_t>(digest[i]) << (8 * i);
  return key;
}

EmbeddingVector gaussian_direction(std::uint64_t key, std::size_t dim) {
  std::vector<float> raw(dim);
  fill_standard_normal(key, raw);
  return normalize(raw);
}

bool is_blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

Embedder::Embedder(EmbedderConfig config, EmbeddingAdapter adapter)
    : config_(config), adapter_(std::move(adapter)) {
  config_.validate();
  if (config_.backend == EmbedderBackend::kExternalAdapter && !adapter_) {
    throw Error(ErrorCode::kConfig, "external-adapter backend requires an adapter");
  }
}

EmbeddingVector Embedder::from_adapter(const AdapterRequest& request) const {
  const auto raw = adapter_(request);
  if (raw.size() != config_.dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "adapter returned " + std::to_string(raw.size()) + " values, expected " +
                    std::to_string(config_.dim));
  }
  return normalize(raw);
}

EmbeddingVector Embedder::encode_text(std::string_view text) const {
  if (is_blank(text)) throw Error(ErrorCode::kInvalidQuery, "query text is empty");
  if (config_.backend == EmbedderBackend::kExternalAdapter) {
    return from_adapter({AdapterRequest::Kind::kText, std::string(text)});
  }
  return gaussian_direction(derive_key("cartosearch/text", text, config_.seed), config_.dim);
}

EmbeddingVector Embedder::encode_image(std::span<const std::uint8_t> bytes) const {
  // Decoding first gives both backends the same error contract.
  const Raster decoded = decode_image(bytes);
  if (config_.backend == EmbedderBackend::kExternalAdapter) {
    return from_adapter({AdapterRequest::Kind::kImage,
                         std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size())});
  }
  const std::string canonical = to_ppm(resize_to_width(decoded, config_.image_width_px));
  return gaussian_direction(derive_key("cartosearch/image", canonical, config_.seed), config_.dim);
}

EmbeddingVector Embedder::encode_image(std::string_view bytes) const {
  return encode_image(
      std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

EmbeddingVector encode_text(std::string_view text, const EmbedderConfig& config) {
  return Embedder(config).encode_text(text);
}

EmbeddingVector encode_image(std::span<const std::uint8_t> bytes, const EmbedderConfig& config) {
  return Embedder(config).encode_image(bytes);
}

}  // namespace cartosearch
