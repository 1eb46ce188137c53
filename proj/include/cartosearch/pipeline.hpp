#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cartosearch/embedder.hpp"
#include "cartosearch/fetch.hpp"
#include "cartosearch/record.hpp"

namespace cartosearch {

struct PipelineOptions {
  std::size_t workers = 8;
  RecordVariant variant = RecordVariant::kStripped;
  /// Full variant only: pull "<resource_url>?fo=json" and keep its "item"
  /// object under metadata.item.
  bool fetch_metadata = true;
  /// Stop after this many catalog rows (for partial runs).
  std::optional<std::size_t> limit;
};

struct RowFailure {
  std::size_t row_number = 0;
  std::string iiif_url;
  std::string error_class;  // to_string(ErrorCode)
  std::string message;
};

struct PipelineReport {
  std::size_t processed = 0;
  std::size_t skipped_existing = 0;
  std::size_t failed = 0;
  std::vector<RowFailure> failures;  // ordered by row_number

  std::size_t rows_consumed() const noexcept { return processed + skipped_existing + failed; }
  nlohmann::json to_json() const;
};

/// Streams the catalog through a bounded pool of workers. Each worker fetches
/// the IIIF rendition at the embedder's image width, embeds it, and writes
/// <sanitized-iiif-id>.json into out_dir. Rows whose record file already
/// exists are skipped. Per-row problems land in the report; only an unusable
/// out_dir (Error(kConfig)) or a missing/invalid catalog aborts the run.
PipelineReport run_pipeline(const std::filesystem::path& catalog,
                            const std::filesystem::path& out_dir, const Embedder& embedder,
                            Fetcher& fetcher, const PipelineOptions& options);

/// Test-backend embedder and default HTTP fetcher.
PipelineReport run_pipeline(const std::filesystem::path& catalog,
                            const std::filesystem::path& out_dir, std::size_t workers,
                            RecordVariant variant, const EmbedderConfig& embedder);

}  // namespace cartosearch
