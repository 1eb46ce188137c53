#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "cartosearch/error.hpp"
#include "cartosearch/hashing.hpp"

namespace cartosearch {
namespace {

std::span<const std::uint8_t> bytes_of(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

TEST(Xxh64, ReferenceVectors) {
  EXPECT_EQ(xxh64(bytes_of("")), 0xef46db3751d8e999ull);
  EXPECT_EQ(xxh64(bytes_of("abc")), 0x44bc2cf5ad770999ull);
  EXPECT_EQ(xxh64(bytes_of("abc"), 1), 0xbea9ca8199328908ull);
}

TEST(Xxh64, LongInputAndStreamingAgree) {
  std::string data;
  for (int r = 0; r < 4; ++r) {
    for (int i = 0; i < 256; ++i) data.push_back(static_cast<char>(i));
  }
  data += "xyz";
  EXPECT_EQ(xxh64(bytes_of(data)), 0xe146cb31b65bc21aull);

  // Every split point must give the one-shot digest.
  for (std::size_t split : {0u, 1u, 31u, 32u, 33u, 500u, 1027u}) {
    Xxh64 h;
    h.update(bytes_of(std::string_view(data).substr(0, split)));
    h.update(bytes_of(std::string_view(data).substr(split)));
    EXPECT_EQ(h.digest(), 0xe146cb31b65bc21aull) << "split " << split;
  }
}

TEST(Sha256, KnownDigest) {
  Sha256 h;
  h.update("abc");
  const auto d = h.finish();
  const std::vector<std::uint8_t> head(d.begin(), d.begin() + 4);
  EXPECT_EQ(head, (std::vector<std::uint8_t>{0xba, 0x78, 0x16, 0xbf}));
}

TEST(Philox, Random123KnownAnswers) {
  EXPECT_EQ(Philox4x32(0)(0, 0), (Philox4x32::Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32(~0ull)(~0ull, ~0ull), (Philox4x32::Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  const std::uint64_t key = 0x299f31d0ull << 32 | 0xa4093822ull;
  const std::uint64_t lo = 0x85a308d3ull << 32 | 0x243f6a88ull;
  const std::uint64_t hi = 0x03707344ull << 32 | 0x13198a2eull;
  EXPECT_EQ(Philox4x32(key)(hi, lo), (Philox4x32::Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(StandardNormal, MomentsAndStreams) {
  std::vector<float> a(200001);
  fill_standard_normal(42, a);
  const double mean = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
  double var = 0;
  for (float v : a) var += (v - mean) * (v - mean);
  var /= a.size();
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(var, 1.0, 0.02);
  for (float v : a) ASSERT_TRUE(std::isfinite(v));

  std::vector<float> b(16), c(16), d(16);
  fill_standard_normal(42, b, 0);
  fill_standard_normal(42, c, 1);
  fill_standard_normal(42, d, 0);
  EXPECT_NE(b, c);
  EXPECT_EQ(b, d);
}

TEST(Base64, RoundTripAndRejects) {
  for (const std::string& s : std::vector<std::string>{"", "f", "fo", "foo", "foob", "fooba", "foobar", std::string("\0\xff\x10", 3)}) {
    EXPECT_EQ(base64_decode(base64_encode(bytes_of(s))), s);
  }
  EXPECT_EQ(base64_encode(bytes_of("foobar")), "Zm9vYmFy");
  EXPECT_EQ(base64_decode("Zm9v\nYmE="), "fooba");
  EXPECT_THROW(base64_decode("Zm9*"), Error);
}

}  // namespace
}  // namespace cartosearch
