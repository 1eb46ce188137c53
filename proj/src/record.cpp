#include "cartosearch/record.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "cartosearch/error.hpp"
#include "cartosearch/iiif.hpp"

namespace cartosearch {

std::string_view to_string(RecordVariant variant) {
  return variant == RecordVariant::kFull ? "full" : "stripped";
}

RecordVariant parse_variant(std::string_view text) {
  if (text == "full") return RecordVariant::kFull;
  if (text == "stripped") return RecordVariant::kStripped;
  throw Error(ErrorCode::kConfig, "variant must be 'full' or 'stripped', got '" +
                                      std::string(text) + "'");
}

nlohmann::json to_json(const EmbeddingRecord& record) {
  nlohmann::json doc;
  doc["iiif_url"] = record.iiif_url;
  const auto values = record.embedding.values();
  doc["embedding"] = std::vector<float>(values.begin(), values.end());
  if (record.metadata) doc["metadata"] = *record.metadata;
  return doc;
}

EmbeddingRecord record_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::kSchema, "record is not a JSON object");
  if (!doc.contains("iiif_url") || !doc["iiif_url"].is_string()) {
    throw Error(ErrorCode::kSchema, "record lacks a string 'iiif_url'");
  }
  if (!doc.contains("embedding") || !doc["embedding"].is_array()) {
    throw Error(ErrorCode::kSchema, "record lacks an 'embedding' array");
  }
  std::vector<float> values;
  values.reserve(doc["embedding"].size());
  for (const auto& v : doc["embedding"]) {
    if (!v.is_number()) throw Error(ErrorCode::kSchema, "embedding holds a non-numeric value");
    values.push_back(v.get<float>());
  }

  EmbeddingRecord record;
  record.iiif_url = doc["iiif_url"].get<std::string>();
  try {
    record.embedding = EmbeddingVector::from_unit(std::move(values));
  } catch (const Error& e) {
    throw Error(ErrorCode::kSchema, std::string("record embedding invalid: ") + e.what());
  }
  if (doc.contains("metadata")) record.metadata = doc["metadata"];
  return record;
}

std::string record_filename(std::string_view iiif_id) { return sanitize_filename(iiif_id) + ".json"; }

EmbeddingRecord read_record(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "record not found: " + path.string());
  const auto doc = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw Error(ErrorCode::kSchema, "record is not valid JSON: " + path.string());
  try {
    return record_from_json(doc);
  } catch (const Error& e) {
    throw Error(e.code(), path.filename().string() + ": " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  static std::atomic<std::uint64_t> sequence{0};
  std::ostringstream tmp_name;
  tmp_name << '.' << path.filename().string() << '.' << std::this_thread::get_id() << '.'
           << sequence.fetch_add(1) << ".tmp";
  const auto tmp = path.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kWrite, "cannot open for writing: " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out.flush()) throw Error(ErrorCode::kWrite, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kWrite, "cannot move record into place: " + path.string());
  }
}

void write_record_atomic(const std::filesystem::path& path, const EmbeddingRecord& record) {
  write_file_atomic(path, to_json(record).dump());
}

}  // namespace cartosearch
