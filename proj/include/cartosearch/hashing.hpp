#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace cartosearch {

using Sha256Digest = std::array<std::uint8_t, 32>;

/// Incremental SHA-256 (OpenSSL EVP underneath).
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::span<const std::uint8_t> bytes);
  Sha256& update(std::string_view bytes);
  Sha256Digest finish();

 private:
  void* ctx_;
};

/// XXH64 over a contiguous buffer. Used as the BETO payload checksum.
std::uint64_t xxh64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0);

/// Streaming XXH64, for checksumming a payload written in pieces.
class Xxh64 {
 public:
  explicit Xxh64(std::uint64_t seed = 0);
  void update(std::span<const std::uint8_t> bytes);
  std::uint64_t digest() const;

 private:
  std::uint64_t v_[4];
  std::uint64_t seed_;
  std::uint64_t total_ = 0;
  std::array<std::uint8_t, 32> buf_{};
  std::size_t buffered_ = 0;
};

/// Philox4x32-10 counter-based generator. Output block i is a pure function of
/// (key, i), so any position in the stream can be drawn independently.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t key) noexcept
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

  Block operator()(std::uint64_t counter_hi, std::uint64_t counter_lo) const noexcept;

 private:
  std::array<std::uint32_t, 2> key_;
};

/// Fills out[i] with standard normal variates drawn from Philox keyed by key.
/// out[2j], out[2j+1] come from block (stream, j) via Box-Muller.
void fill_standard_normal(std::uint64_t key, std::span<float> out, std::uint64_t stream = 0);

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws Error(kSchema) on malformed input. Whitespace is ignored.
std::string base64_decode(std::string_view text);

}  // namespace cartosearch
