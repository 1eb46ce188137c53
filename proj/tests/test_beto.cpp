#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "cartosearch/beto.hpp"
#include "cartosearch/error.hpp"
#include "cartosearch/record.hpp"
#include "support.hpp"

namespace cartosearch {
namespace {

using testing::TempDir;

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kAdapter;
}

std::string hex(const std::string& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (unsigned char c : bytes) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 15]);
  }
  return out;
}

BetoIndex two_columns() {
  return BetoIndex(2, {0.6f, 0.8f, 1.0f, 0.0f}, {"https://h/iiif/a.b", "https://h/iiif/c.d"});
}

// Bytes produced by an independent Python writer (struct + xxhash) for the
// same index, frozen.
TEST(BetoFormat, ExactBytes) {
  TempDir dir;
  const auto written = save_index(two_columns(), dir / "x.beto");
  EXPECT_EQ(written, 124u);
  EXPECT_EQ(serialized_size(two_columns()), 124u);
  EXPECT_EQ(hex(testing::read_file(dir / "x.beto")),
            std::string("4245544f010000000200000002000000000000008deb9e76ebc348a2")
            + std::string(72, '0') +  // header padding
            "9a99193fcdcc4c3f0000803f00000000"
            "1200000068747470733a2f2f682f696969662f612e62"
            "1200000068747470733a2f2f682f696969662f632e64");
}

TEST(BetoFormat, RoundTripIsBitIdentical) {
  TempDir dir;
  for (std::size_t n : {1u, 3u, 1000u}) {
    const auto original = make_synthetic_index(n, 24, 7);
    const auto path = dir / ("i" + std::to_string(n) + ".beto");
    const auto bytes = save_index(original, path);
    const auto loaded = load_index(path);
    EXPECT_TRUE(bit_identical(original, loaded)) << n;
    EXPECT_TRUE(loaded.is_mapped());
    EXPECT_EQ(loaded.bytes_on_disk(), bytes);
    EXPECT_EQ(stats(loaded).n, n);
    EXPECT_EQ(stats(loaded).m, 24u);
  }
}

TEST(BetoFormat, NonAsciiUrlsSurvive) {
  TempDir dir;
  const BetoIndex idx(1, {1.0f}, {"https://h/iiif/Zürich.map"});
  save_index(idx, dir / "u.beto");
  EXPECT_EQ(load_index(dir / "u.beto").url(0), "https://h/iiif/Zürich.map");
}

TEST(BetoFormat, CorruptionIsDetected) {
  TempDir dir;
  const auto path = dir / "c.beto";
  save_index(make_synthetic_index(10, 8, 1), path);
  const std::string good = testing::read_file(path);

  const auto with = [&](const std::string& bytes) {
    testing::write_file(path, bytes);
    return code_of([&] { load_index(path); });
  };
  EXPECT_EQ(with(good.substr(0, good.size() - 1)), ErrorCode::kCorruption);  // URL table cut
  EXPECT_EQ(with(good.substr(0, 64 + 100)), ErrorCode::kCorruption);        // payload cut
  EXPECT_EQ(with(good.substr(0, 40)), ErrorCode::kCorruption);              // header cut
  EXPECT_EQ(with(good + "x"), ErrorCode::kCorruption);                      // trailing bytes

  for (std::size_t at : {std::size_t{64}, std::size_t{64 + 4 * 8 * 5 + 1}, good.size() - 1}) {
    std::string flipped = good;
    flipped[at] = static_cast<char>(flipped[at] ^ 0x01);
    EXPECT_EQ(with(flipped), ErrorCode::kCorruption) << "flip at " << at;
  }

  std::string magic = good;
  magic[0] = 'X';
  EXPECT_EQ(with(magic), ErrorCode::kFormat);
  std::string version = good;
  version[4] = 2;
  EXPECT_EQ(with(version), ErrorCode::kFormat);
  EXPECT_EQ(with("tiny"), ErrorCode::kFormat);
  EXPECT_EQ(code_of([&] { load_index(dir / "absent.beto"); }), ErrorCode::kNotFound);
}

TEST(BetoFormat, ChecksumCanBeSkipped) {
  TempDir dir;
  const auto path = dir / "c.beto";
  save_index(make_synthetic_index(4, 4, 1), path);
  std::string bytes = testing::read_file(path);
  bytes[70] = static_cast<char>(bytes[70] ^ 0x10);
  testing::write_file(path, bytes);
  EXPECT_NO_THROW(load_index(path, /*verify_checksum=*/false));
}

TEST(BetoFormat, SaveRejectsEmptyAndLeavesNoTemporaries) {
  TempDir dir;
  EXPECT_EQ(code_of([&] { save_index(BetoIndex{}, dir / "e.beto"); }), ErrorCode::kEmptyInput);
  save_index(two_columns(), dir / "x.beto");
  save_index(two_columns(), dir / "x.beto");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++entries;
  EXPECT_EQ(entries, 1u);
}

TEST(BetoIndex, ConstructorValidation) {
  EXPECT_EQ(code_of([] { BetoIndex(2, {1, 0, 1}, {"a", "b"}); }), ErrorCode::kSchema);
  EXPECT_EQ(code_of([] { BetoIndex(1, {1, 1}, {"a", "a"}); }), ErrorCode::kDuplicateId);
  const auto idx = two_columns();
  EXPECT_FLOAT_EQ(idx.column(1)[0], 1.0f);
  EXPECT_EQ(idx.url(1), "https://h/iiif/c.d");
}

TEST(BuildBeto, SortedRecordOrderAndErrors) {
  TempDir dir;
  const auto rec = [](const std::string& url, std::vector<float> v) {
    return EmbeddingRecord{url, normalize(v), std::nullopt};
  };
  write_record_atomic(dir / "b.json", rec("https://h/b", {0, 1}));
  write_record_atomic(dir / "a.json", rec("https://h/a", {1, 0}));
  testing::write_file(dir / ".hidden.json", "garbage");
  testing::write_file(dir / "notes.txt", "ignored");
  const auto idx = build_beto(dir.path());
  ASSERT_EQ(idx.size(), 2u);
  EXPECT_EQ(idx.url(0), "https://h/a");
  EXPECT_EQ(idx.url(1), "https://h/b");
  EXPECT_FLOAT_EQ(idx.column(1)[1], 1.0f);
  EXPECT_GT(idx.build_seconds(), 0.0);
  EXPECT_EQ(idx.bytes_on_disk(), serialized_size(idx));

  write_record_atomic(dir / "c.json", rec("https://h/c", {1, 0, 0}));
  try {
    build_beto(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionConflict);
    EXPECT_NE(std::string(e.what()).find("c.json"), std::string::npos);
  }
  std::filesystem::remove(dir / "c.json");
  write_record_atomic(dir / "d.json", rec("https://h/a", {1, 0}));
  EXPECT_EQ(code_of([&] { build_beto(dir.path()); }), ErrorCode::kDuplicateId);

  TempDir empty;
  EXPECT_EQ(code_of([&] { build_beto(empty.path()); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(code_of([&] { build_beto(empty / "nope"); }), ErrorCode::kNotFound);
}

TEST(SyntheticIndex, DeterministicUnitColumns) {
  const auto a = make_synthetic_index(50, 32, 3);
  const auto b = make_synthetic_index(50, 32, 3);
  EXPECT_TRUE(bit_identical(a, b));
  EXPECT_FALSE(bit_identical(a, make_synthetic_index(50, 32, 4)));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(l2_norm(a.column(i)), 1.0, 1e-5);
  EXPECT_EQ(a.url(7), "https://example.org/iiif/synthetic.set.cs07");
  // A prefix of a larger index has the same columns.
  const auto big = make_synthetic_index(500, 32, 3);
  for (std::size_t j = 0; j < 32; ++j) EXPECT_EQ(big.column(42)[j], a.column(42)[j]);
}

}  // namespace
}  // namespace cartosearch
