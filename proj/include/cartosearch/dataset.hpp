#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cartosearch/caption.hpp"

namespace cartosearch {

struct MapCaptionPair {
  std::string image_ref;  // IIIF URL or local path
  std::string caption;

  friend bool operator==(const MapCaptionPair&, const MapCaptionPair&) = default;
};

struct DatasetConfig {
  std::size_t n_single_image = 10000;
  std::size_t n_sanborn = 2000;
  std::size_t n_coverage = 227;
  std::uint64_t seed = 0;
  QualityRules quality;
  /// Items with at most this many segments are eligible for the item pool
  /// (their first segment is used). 1 means single-image items only; 0
  /// lifts the limit.
  std::size_t max_segments_per_item = 1;
  /// One tag per coverage draw; the first n_coverage are used. A row covers a
  /// tag when one of its metadata locations equals the tag, ignoring case.
  std::vector<std::string> region_tags;
};

struct PoolShortfall {
  std::string pool;  // "single_image" | "sanborn" | "coverage"
  std::size_t requested = 0;
  std::size_t achieved = 0;
};

struct DatasetReport {
  std::size_t sampled = 0;
  std::size_t discarded = 0;
  std::map<RejectReason, std::size_t> discarded_by_reason;
  std::size_t final_count = 0;
  std::vector<PoolShortfall> shortfalls;

  nlohmann::json to_json() const;
};

struct Dataset {
  std::vector<MapCaptionPair> pairs;
  DatasetReport report;
};

/// Samples the three pools with the configured seed, then captions and
/// filters every sampled row. Records are looked up as
/// records_dir/record_filename(iiif_id) and must be the full variant; a
/// missing or unreadable record counts as unresponsive. Pairs keep sampling
/// order: item pool, then Sanborn, then coverage.
///
/// Rows whose collection_context contains "sanborn" (any case) form the
/// Sanborn pool and are excluded from the other two. Shortfalls are logged and
/// listed in the report. Throws Error(kNotFound)/Error(kSchema) for an
/// unreadable catalog.
Dataset build_dataset(const std::filesystem::path& catalog, const std::filesystem::path& records_dir,
                      const DatasetConfig& config);

/// One JSON object {"image_ref", "caption"} per line.
void write_manifest(const std::filesystem::path& path, const std::vector<MapCaptionPair>& pairs);
std::vector<MapCaptionPair> read_manifest(const std::filesystem::path& path);

/// "<stem>.report.json" next to the manifest.
std::filesystem::path report_path_for(const std::filesystem::path& manifest);

/// Non-empty lines not starting with '#', trimmed.
std::vector<std::string> read_region_tags(const std::filesystem::path& path);

}  // namespace cartosearch
