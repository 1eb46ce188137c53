#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "cartosearch/embedder.hpp"

namespace cartosearch {

enum class RecordVariant { kFull, kStripped };

std::string_view to_string(RecordVariant variant);
/// "full" | "stripped"; throws Error(kConfig) otherwise.
RecordVariant parse_variant(std::string_view text);

/// Per-image output of the ingest pipeline. The stripped variant serializes
/// to exactly {"iiif_url", "embedding"}; the full variant adds "metadata".
struct EmbeddingRecord {
  std::string iiif_url;
  EmbeddingVector embedding;
  std::optional<nlohmann::json> metadata;

  RecordVariant variant() const noexcept {
    return metadata ? RecordVariant::kFull : RecordVariant::kStripped;
  }
};

nlohmann::json to_json(const EmbeddingRecord& record);
/// Throws Error(kSchema) for missing keys, non-numeric embeddings, or an
/// embedding that is not unit-norm.
EmbeddingRecord record_from_json(const nlohmann::json& doc);

/// "<sanitized-iiif-id>.json"
std::string record_filename(std::string_view iiif_id);

EmbeddingRecord read_record(const std::filesystem::path& path);

/// Writes to a temporary sibling and renames it into place, so readers never
/// observe a partial file. Throws Error(kWrite).
void write_record_atomic(const std::filesystem::path& path, const EmbeddingRecord& record);

/// Writes text through the same temp-then-rename path.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace cartosearch
