#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cartosearch {

/// Column store of n unit-norm embeddings of dimension m plus the parallel
/// table of IIIF URLs: column i is the embedding of urls()[i].
///
/// Immutable once constructed. Copies share storage, so an index can be
/// handed to many concurrent readers cheaply. The float payload is either
/// owned or a read-only mapping of a BETO file.
class BetoIndex {
 public:
  BetoIndex() = default;

  /// matrix is column-major (m values per column). Throws Error(kSchema) when
  /// sizes disagree and Error(kDuplicateId) for a repeated URL.
  BetoIndex(std::size_t dim, std::vector<float> matrix, std::vector<std::string> urls);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }

  std::span<const float> matrix() const noexcept { return {data_, dim_ * count_}; }
  std::span<const float> column(std::size_t i) const noexcept {
    return {data_ + i * dim_, dim_};
  }
  const std::string& url(std::size_t i) const { return (*urls_)[i]; }
  const std::vector<std::string>& urls() const noexcept;

  /// File size when loaded; otherwise the size save_index would write.
  std::uint64_t bytes_on_disk() const noexcept { return bytes_on_disk_; }
  /// Wall time spent producing this in-memory index (build, load or generate).
  double build_seconds() const noexcept { return build_seconds_; }
  bool is_mapped() const noexcept { return mapped_; }

 private:
  friend BetoIndex load_index(const std::filesystem::path&, bool);
  friend BetoIndex build_beto(const std::filesystem::path&);
  friend BetoIndex make_synthetic_index(std::size_t, std::size_t, std::uint64_t, const std::string&);

  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  std::shared_ptr<const void> storage_;
  const float* data_ = nullptr;
  std::shared_ptr<const std::vector<std::string>> urls_;
  std::uint64_t bytes_on_disk_ = 0;
  double build_seconds_ = 0.0;
  bool mapped_ = false;
};

struct IndexStats {
  std::size_t n = 0;
  std::size_t m = 0;
  std::uint64_t bytes_on_disk = 0;
  double build_duration_seconds = 0.0;
};

IndexStats stats(const BetoIndex& index);

/// Same shape, bit-identical floats, identical URL table.
bool bit_identical(const BetoIndex& a, const BetoIndex& b);

// -- BETO file format ----------------------------------------------------------
//
//   offset  size  field
//        0     4  magic "BETO"
//        4     4  version (u32) = 1
//        8     4  m (u32)
//       12     8  n (u64)
//       20     8  checksum (u64): XXH64, seed 0, over every byte from offset 64
//                 to end of file (float payload then URL table)
//       28    36  zero padding
//       64  4*m*n float32 payload, column-major
//        ...        URL table: n entries of (u32 length, UTF-8 bytes)
//
// All integers and floats are little-endian.

inline constexpr char kBetoMagic[4] = {'B', 'E', 'T', 'O'};
inline constexpr std::uint32_t kBetoVersion = 1;
inline constexpr std::size_t kBetoHeaderSize = 64;

/// Reads every *.json record in records_dir in sorted filename order.
/// Errors: kEmptyInput (no records), kDimensionConflict (names the file),
/// kDuplicateId (repeated IIIF URL), plus record parse errors.
BetoIndex build_beto(const std::filesystem::path& records_dir);

/// Returns bytes written. Throws Error(kEmptyInput) for an empty index and
/// Error(kWrite) on I/O failure. The file is written to a temporary sibling
/// and renamed into place.
std::uint64_t save_index(const BetoIndex& index, const std::filesystem::path& path);

/// Size save_index writes for this index.
std::uint64_t serialized_size(const BetoIndex& index);

/// Maps the file read-only. Errors: kNotFound, kFormat (magic/version),
/// kCorruption (size mismatch, truncated URL table, checksum mismatch).
BetoIndex load_index(const std::filesystem::path& path, bool verify_checksum = true);

/// n random unit vectors (Philox-seeded Gaussian directions) with URLs
/// url_prefix + zero-padded column number. Generation is parallel and the
/// result depends only on (n, m, seed).
BetoIndex make_synthetic_index(std::size_t n, std::size_t m, std::uint64_t seed,
                               const std::string& url_prefix = "https://example.org/iiif/synthetic.set.cs");

}  // namespace cartosearch
