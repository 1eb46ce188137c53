#pragma once

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cartosearch/catalog.hpp"
#include "cartosearch/embedder.hpp"
#include "cartosearch/record.hpp"

namespace cartosearch::testing {

/// One catalog row plus the item document its full record carries.
struct CorpusRow {
  std::string iiif_id;
  std::string collection_context;
  /// nullopt writes no record file.
  std::optional<nlohmann::json> item;
};

inline nlohmann::json map_item(const std::string& title, const std::vector<std::string>& locations = {},
                               const std::vector<std::string>& notes = {"Catalog note.", "LC copy 1."}) {
  return {{"title", title}, {"location", locations}, {"notes", notes}};
}

inline std::string corpus_iiif_url(const std::string& id) {
  return "https://tile.example.org/iiif/" + id + "/full/pct:12.5/0/default.jpg";
}

/// Writes catalog.csv and full-variant records (dim 4) under root.
inline void write_corpus(const std::filesystem::path& root, const std::vector<CorpusRow>& rows) {
  std::filesystem::create_directories(root / "records");
  std::vector<CatalogRow> catalog;
  catalog.reserve(rows.size());
  const auto embedding = normalize(std::vector<float>{1, 0, 0, 0});
  for (const auto& r : rows) {
    const auto url = corpus_iiif_url(r.iiif_id);
    catalog.push_back({"https://www.loc.gov/resource/" + r.iiif_id + "/", url, 1000, r.collection_context, r.iiif_id});
    if (!r.item) continue;
    EmbeddingRecord rec{url, embedding, nlohmann::json{{"item", *r.item}}};
    write_record_atomic(root / "records" / record_filename(r.iiif_id), rec);
  }
  write_catalog(root / "catalog.csv", catalog);
}

inline std::string numbered(const char* prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%06zu", prefix, n);
  return buf;
}

}  // namespace cartosearch::testing
