#include "cartosearch/beto.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <unordered_set>

#include "cartosearch/embedder.hpp"
#include "cartosearch/error.hpp"
#include "cartosearch/hashing.hpp"
#include "cartosearch/record.hpp"
#include "parallel.hpp"

static_assert(std::endian::native == std::endian::little,
              "BETO payloads are mapped in place and assume a little-endian host");

namespace cartosearch {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_unique(const std::vector<std::string>& urls) {
  std::unordered_set<std::string_view> seen;
  seen.reserve(urls.size());
  for (const auto& url : urls) {
    if (!seen.insert(url).second) throw Error(ErrorCode::kDuplicateId, "duplicate IIIF URL: " + url);
  }
}

std::uint64_t url_table_size(const std::vector<std::string>& urls) {
  std::uint64_t total = 0;
  for (const auto& url : urls) total += 4 + url.size();
  return total;
}

template <typename T>
void put_le(std::uint8_t* dst, T value) {
  std::memcpy(dst, &value, sizeof(T));
}

template <typename T>
T get_le(const std::uint8_t* src) {
  T value;
  std::memcpy(&value, src, sizeof(T));
  return value;
}

struct FileMapping {
  void* addr = nullptr;
  std::size_t length = 0;
  ~FileMapping() {
    if (addr != nullptr && addr != MAP_FAILED) munmap(addr, length);
  }
};

}  // namespace

BetoIndex::BetoIndex(std::size_t dim, std::vector<float> matrix, std::vector<std::string> urls) {
  if (dim == 0 && !urls.empty()) throw Error(ErrorCode::kSchema, "index dimension must be positive");
  if (matrix.size() != dim * urls.size()) {
    throw Error(ErrorCode::kSchema, "matrix holds " + std::to_string(matrix.size()) +
                                        " floats, expected " + std::to_string(dim * urls.size()));
  }
  check_unique(urls);
  dim_ = dim;
  count_ = urls.size();
  auto owned = std::make_shared<std::vector<float>>(std::move(matrix));
  data_ = owned->data();
  storage_ = std::move(owned);
  urls_ = std::make_shared<const std::vector<std::string>>(std::move(urls));
  bytes_on_disk_ = serialized_size(*this);
}

const std::vector<std::string>& BetoIndex::urls() const noexcept {
  static const std::vector<std::string> kEmpty;
  return urls_ ? *urls_ : kEmpty;
}

IndexStats stats(const BetoIndex& index) {
  return {index.size(), index.dim(), index.bytes_on_disk(), index.build_seconds()};
}

bool bit_identical(const BetoIndex& a, const BetoIndex& b) {
  if (a.dim() != b.dim() || a.size() != b.size()) return false;
  const auto ma = a.matrix();
  const auto mb = b.matrix();
  if (!ma.empty() && std::memcmp(ma.data(), mb.data(), ma.size_bytes()) != 0) return false;
  return a.urls() == b.urls();
}

std::uint64_t serialized_size(const BetoIndex& index) {
  return kBetoHeaderSize + 4ull * index.dim() * index.size() + url_table_size(index.urls());
}

// -- build ---------------------------------------------------------------------

BetoIndex build_beto(const std::filesystem::path& records_dir) {
  const auto start = Clock::now();
  if (!std::filesystem::is_directory(records_dir)) {
    throw Error(ErrorCode::kNotFound, "records directory not found: " + records_dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(records_dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && entry.path().extension() == ".json" && name.front() != '.') {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) throw Error(ErrorCode::kEmptyInput, "no record files in " + records_dir.string());
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });

  std::vector<EmbeddingRecord> records(files.size());
  std::exception_ptr failure;
  std::size_t failure_at = files.size();
  std::mutex failure_mutex;
  detail::parallel_ranges(files.size(), detail::default_threads(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      try {
        records[i] = read_record(files[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (i < failure_at) {
          failure_at = i;
          failure = std::current_exception();
        }
        return;
      }
    }
  });
  // Report the first bad file in sorted order, regardless of thread timing.
  if (failure) std::rethrow_exception(failure);

  const std::size_t dim = records.front().embedding.dim();
  std::vector<float> matrix(dim * records.size());
  std::vector<std::string> urls;
  urls.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto values = records[i].embedding.values();
    if (values.size() != dim) {
      throw Error(ErrorCode::kDimensionConflict,
                  files[i].filename().string() + " has dimension " + std::to_string(values.size()) +
                      ", expected " + std::to_string(dim));
    }
    std::copy(values.begin(), values.end(), matrix.begin() + static_cast<std::ptrdiff_t>(i * dim));
    urls.push_back(std::move(records[i].iiif_url));
  }
  BetoIndex index(dim, std::move(matrix), std::move(urls));
  index.build_seconds_ = seconds_since(start);
  return index;
}

// -- save / load -----------------------------------------------------------------

std::uint64_t save_index(const BetoIndex& index, const std::filesystem::path& path) {
  if (index.empty()) throw Error(ErrorCode::kEmptyInput, "refusing to save an empty index");
  if (index.dim() > UINT32_MAX) throw Error(ErrorCode::kWrite, "dimension exceeds u32");

  std::vector<std::uint8_t> table;
  table.reserve(url_table_size(index.urls()));
  for (const auto& url : index.urls()) {
    if (url.size() > UINT32_MAX) throw Error(ErrorCode::kWrite, "URL longer than 4 GiB");
    std::uint8_t len[4];
    put_le(len, static_cast<std::uint32_t>(url.size()));
    table.insert(table.end(), len, len + 4);
    table.insert(table.end(), url.begin(), url.end());
  }

  const auto payload = std::as_bytes(index.matrix());
  Xxh64 checksum;
  checksum.update({reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()});
  checksum.update(table);

  std::uint8_t header[kBetoHeaderSize] = {};
  std::memcpy(header, kBetoMagic, 4);
  put_le(header + 4, kBetoVersion);
  put_le(header + 8, static_cast<std::uint32_t>(index.dim()));
  put_le(header + 12, static_cast<std::uint64_t>(index.size()));
  put_le(header + 20, checksum.digest());

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kWrite, "cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    out.write(reinterpret_cast<const char*>(table.data()), static_cast<std::streamsize>(table.size()));
    if (!out.flush()) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorCode::kWrite, "write failed: " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kWrite, "cannot move index into place: " + path.string());
  return sizeof(header) + payload.size() + table.size();
}

BetoIndex load_index(const std::filesystem::path& path, bool verify_checksum) {
  const auto start = Clock::now();
  const int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd < 0) throw Error(ErrorCode::kNotFound, "index not found: " + path.string());
  struct stat st {};
  if (::fstat(fd, &st) != 0) {
    ::close(fd);
    throw Error(ErrorCode::kNotFound, "cannot stat index: " + path.string());
  }
  const auto file_size = static_cast<std::uint64_t>(st.st_size);
  if (file_size < kBetoHeaderSize) {
    ::close(fd);
    if (file_size >= 4) {
      // Distinguish a truncated BETO file from a foreign one.
      char magic[4];
      std::ifstream in(path, std::ios::binary);
      in.read(magic, 4);
      if (std::memcmp(magic, kBetoMagic, 4) == 0) {
        throw Error(ErrorCode::kCorruption, "truncated header: expected " +
                                                std::to_string(kBetoHeaderSize) + " bytes, found " +
                                                std::to_string(file_size));
      }
    }
    throw Error(ErrorCode::kFormat, "not a BETO file (too short): " + path.string());
  }

  auto mapping = std::make_shared<FileMapping>();
  mapping->length = file_size;
  mapping->addr = ::mmap(nullptr, file_size, PROT_READ, MAP_PRIVATE, fd, 0);
  ::close(fd);
  if (mapping->addr == MAP_FAILED) throw Error(ErrorCode::kNotFound, "cannot map index: " + path.string());
  ::madvise(mapping->addr, file_size, MADV_WILLNEED);

  const auto* bytes = static_cast<const std::uint8_t*>(mapping->addr);
  if (std::memcmp(bytes, kBetoMagic, 4) != 0) throw Error(ErrorCode::kFormat, "bad magic in " + path.string());
  const auto version = get_le<std::uint32_t>(bytes + 4);
  if (version != kBetoVersion) {
    throw Error(ErrorCode::kFormat, "unsupported BETO version " + std::to_string(version));
  }
  const std::uint64_t dim = get_le<std::uint32_t>(bytes + 8);
  const std::uint64_t count = get_le<std::uint64_t>(bytes + 12);
  const std::uint64_t stored_checksum = get_le<std::uint64_t>(bytes + 20);
  if (dim == 0 || count == 0) throw Error(ErrorCode::kFormat, "BETO header declares an empty index");

  const std::uint64_t payload_bytes = 4 * dim * count;
  if (payload_bytes / 4 / dim != count || kBetoHeaderSize + payload_bytes + 4 * count > file_size) {
    throw Error(ErrorCode::kCorruption,
                "truncated payload: expected at least " +
                    std::to_string(kBetoHeaderSize + payload_bytes + 4 * count) + " bytes, found " +
                    std::to_string(file_size));
  }

  std::vector<std::string> urls;
  urls.reserve(count);
  std::uint64_t pos = kBetoHeaderSize + payload_bytes;
  for (std::uint64_t i = 0; i < count; ++i) {
    if (pos + 4 > file_size) {
      throw Error(ErrorCode::kCorruption, "truncated URL table: entry " + std::to_string(i) +
                                              " needs " + std::to_string(pos + 4) + " bytes, found " +
                                              std::to_string(file_size));
    }
    const auto len = get_le<std::uint32_t>(bytes + pos);
    pos += 4;
    if (pos + len > file_size) {
      throw Error(ErrorCode::kCorruption, "truncated URL table: entry " + std::to_string(i) +
                                              " needs " + std::to_string(pos + len) +
                                              " bytes, found " + std::to_string(file_size));
    }
    urls.emplace_back(reinterpret_cast<const char*>(bytes + pos), len);
    pos += len;
  }
  if (pos != file_size) {
    throw Error(ErrorCode::kCorruption, "size mismatch: expected " + std::to_string(pos) +
                                            " bytes, found " + std::to_string(file_size));
  }
  if (verify_checksum) {
    const auto actual = xxh64({bytes + kBetoHeaderSize, file_size - kBetoHeaderSize});
    if (actual != stored_checksum) throw Error(ErrorCode::kCorruption, "checksum mismatch in " + path.string());
  }
  check_unique(urls);

  BetoIndex index;
  index.dim_ = dim;
  index.count_ = count;
  index.data_ = reinterpret_cast<const float*>(bytes + kBetoHeaderSize);
  index.storage_ = std::move(mapping);
  index.urls_ = std::make_shared<const std::vector<std::string>>(std::move(urls));
  index.bytes_on_disk_ = file_size;
  index.mapped_ = true;
  index.build_seconds_ = seconds_since(start);
  return index;
}

// -- synthetic -------------------------------------------------------------------

BetoIndex make_synthetic_index(std::size_t n, std::size_t m, std::uint64_t seed,
                               const std::string& url_prefix) {
  const auto start = Clock::now();
  if (n == 0 || m == 0) throw Error(ErrorCode::kEmptyInput, "synthetic index needs n, m >= 1");
  std::vector<float> matrix(n * m);
  detail::parallel_ranges(n, detail::default_threads(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      std::span<float> col(matrix.data() + i * m, m);
      fill_standard_normal(seed, col, i + 1);
      double sq = 0.0;
      for (float x : col) sq += static_cast<double>(x) * x;
      const double inv = 1.0 / std::sqrt(sq);
      for (float& x : col) x = static_cast<float>(x * inv);
    }
  });
  const int width = static_cast<int>(std::to_string(n).size());
  std::vector<std::string> urls;
  urls.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string num = std::to_string(i);
    urls.push_back(url_prefix + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num);
  }
  BetoIndex index(m, std::move(matrix), std::move(urls));
  index.build_seconds_ = seconds_since(start);
  return index;
}

}  // namespace cartosearch
