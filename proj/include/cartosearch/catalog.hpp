#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cartosearch {

/// One catalog line: which image to fetch and where its record lives on loc.gov.
struct CatalogRow {
  std::string resource_url;
  std::string iiif_url;
  std::optional<std::uint64_t> file_size;
  std::string collection_context;
  /// From an explicit iiif_id column when present, else iiif_id_from_url().
  std::string iiif_id;
};

/// A consumed data line. Malformed lines carry an error instead of a row so
/// that callers can account for them without aborting the stream.
struct CatalogEntry {
  std::size_t row_number = 0;  // 1-based, header excluded
  std::optional<CatalogRow> row;
  std::string iiif_url;  // raw field value, useful for failure reports
  std::string error;

  bool ok() const noexcept { return row.has_value(); }
};

/// Lazy RFC 4180 reader. Recognised header names (case-insensitive):
///   resource_url | resource | resource_link      (required)
///   iiif_url | iiif | image_url | iiif_image_url (required)
///   file_size | size
///   collection_context | context | partof | collection
///   iiif_id
/// Throws Error(kNotFound) for a missing file and Error(kSchema) when a
/// required column is absent.
class CatalogReader {
 public:
  explicit CatalogReader(const std::filesystem::path& path);

  std::optional<CatalogEntry> next();
  const std::vector<std::string>& header() const noexcept { return header_; }

 private:
  bool read_record(std::vector<std::string>& fields);

  std::ifstream in_;
  std::vector<std::string> header_;
  std::map<std::string, std::size_t> columns_;
  std::size_t rows_read_ = 0;
};

/// Eager convenience over CatalogReader.
std::vector<CatalogEntry> read_catalog(const std::filesystem::path& path);

/// Writes rows under the canonical header
/// resource_url,iiif_url,file_size,collection_context.
void write_catalog(const std::filesystem::path& path, const std::vector<CatalogRow>& rows);

}  // namespace cartosearch
