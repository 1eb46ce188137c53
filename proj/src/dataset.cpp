#include "cartosearch/dataset.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <optional>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "cartosearch/catalog.hpp"
#include "cartosearch/error.hpp"
#include "cartosearch/iiif.hpp"
#include "cartosearch/record.hpp"
#include "parallel.hpp"

namespace cartosearch {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_sanborn(const CatalogRow& row) {
  return lower(row.collection_context).find("sanborn") != std::string::npos;
}

// Uniform in [0, bound) by rejection; std distributions differ across
// standard libraries, this does not.
std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

// Moves a uniform sample of k elements to the front (partial Fisher-Yates).
template <typename T>
void sample_front(std::vector<T>& pool, std::size_t k, std::mt19937_64& rng) {
  k = std::min(k, pool.size());
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(draw_below(rng, pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
}

std::optional<nlohmann::json> load_item(const std::filesystem::path& records_dir, const CatalogRow& row) {
  try {
    const auto record = read_record(records_dir / record_filename(row.iiif_id));
    if (!record.metadata || !record.metadata->contains("item")) return std::nullopt;
    return std::optional<nlohmann::json>(std::in_place, record.metadata->at("item"));
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::vector<std::string> item_locations(const nlohmann::json& item) {
  std::vector<std::string> out;
  const auto it = item.find("location");
  if (it == item.end()) return out;
  if (it->is_string()) out.push_back(lower(it->get<std::string>()));
  if (it->is_array()) {
    for (const auto& v : *it) {
      if (v.is_string()) out.push_back(lower(v.get<std::string>()));
    }
  }
  return out;
}

struct Outcome {
  std::optional<MapCaptionPair> pair;
  RejectReason reason = RejectReason::kUnresponsive;
};

Outcome evaluate(const std::filesystem::path& records_dir, const CatalogRow& row, const QualityRules& rules) {
  const auto item = load_item(records_dir, row);
  if (!item) return {std::nullopt, RejectReason::kUnresponsive};
  std::string caption;
  try {
    caption = build_caption(caption_source_from_item(*item, derive_resource_id(row.iiif_id)));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kMissingTitle) throw;
    return {std::nullopt, RejectReason::kNoFeatures};
  }
  const auto verdict = quality_filter(caption, rules);
  if (!verdict.accepted) return {std::nullopt, *verdict.reason};
  return {MapCaptionPair{row.iiif_url, std::move(caption)}, RejectReason::kUnresponsive};
}

void note_shortfall(DatasetReport& report, std::string pool, std::size_t requested, std::size_t achieved) {
  if (achieved >= requested) return;
  spdlog::warn("{} pool: requested {}, only {} eligible", pool, requested, achieved);
  report.shortfalls.push_back({std::move(pool), requested, achieved});
}

}  // namespace

nlohmann::json DatasetReport::to_json() const {
  nlohmann::json reasons = nlohmann::json::object();
  for (auto r : {RejectReason::kUnresponsive, RejectReason::kNonsensical, RejectReason::kLanguageChange,
                 RejectReason::kNoFeatures}) {
    const auto it = discarded_by_reason.find(r);
    reasons[std::string(to_string(r))] = it == discarded_by_reason.end() ? 0 : it->second;
  }
  nlohmann::json shortfall = nlohmann::json::array();
  for (const auto& s : shortfalls) {
    shortfall.push_back({{"pool", s.pool}, {"requested", s.requested}, {"achieved", s.achieved}});
  }
  return {{"sampled", sampled},
          {"discarded", discarded},
          {"discarded_by_reason", reasons},
          {"final", final_count},
          {"shortfalls", shortfall}};
}

Dataset build_dataset(const std::filesystem::path& catalog, const std::filesystem::path& records_dir,
                      const DatasetConfig& config) {
  std::vector<CatalogRow> rows;
  for (auto& entry : read_catalog(catalog)) {
    if (entry.ok()) rows.push_back(std::move(*entry.row));
  }

  // Segments grouped by item, in catalog order.
  std::vector<std::vector<std::size_t>> items;
  std::unordered_map<std::string, std::size_t> item_of;
  std::vector<std::size_t> sanborn;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (is_sanborn(rows[i])) {
      sanborn.push_back(i);
      continue;
    }
    const auto [it, fresh] = item_of.emplace(derive_resource_id(rows[i].iiif_id), items.size());
    if (fresh) items.emplace_back();
    items[it->second].push_back(i);
  }

  std::vector<std::size_t> item_pool;
  for (const auto& segments : items) {
    if (config.max_segments_per_item == 0 || segments.size() <= config.max_segments_per_item) {
      item_pool.push_back(segments.front());
    }
  }

  Dataset out;
  DatasetReport& report = out.report;
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> selected;
  std::unordered_set<std::size_t> taken;

  sample_front(item_pool, config.n_single_image, rng);
  const std::size_t n_items = std::min(config.n_single_image, item_pool.size());
  selected.insert(selected.end(), item_pool.begin(), item_pool.begin() + static_cast<std::ptrdiff_t>(n_items));
  note_shortfall(report, "single_image", config.n_single_image, n_items);

  sample_front(sanborn, config.n_sanborn, rng);
  const std::size_t n_sanborn = std::min(config.n_sanborn, sanborn.size());
  selected.insert(selected.end(), sanborn.begin(), sanborn.begin() + static_cast<std::ptrdiff_t>(n_sanborn));
  note_shortfall(report, "sanborn", config.n_sanborn, n_sanborn);
  taken.insert(selected.begin(), selected.end());

  if (config.n_coverage > 0) {
    const std::size_t n_tags = std::min(config.n_coverage, config.region_tags.size());
    std::unordered_map<std::string, std::vector<std::size_t>> covering;
    for (std::size_t t = 0; t < n_tags; ++t) covering.emplace(lower(config.region_tags[t]), std::vector<std::size_t>{});

    std::vector<std::size_t> candidates;
    for (const auto& segments : items) {
      for (std::size_t r : segments) {
        if (!taken.contains(r)) candidates.push_back(r);
      }
    }
    std::sort(candidates.begin(), candidates.end());
    std::vector<std::vector<std::string>> locations(candidates.size());
    detail::parallel_ranges(candidates.size(), detail::default_threads(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        if (auto item = load_item(records_dir, rows[candidates[i]])) locations[i] = item_locations(*item);
      }
    });
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      for (const auto& loc : locations[i]) {
        const auto it = covering.find(loc);
        if (it != covering.end() && (it->second.empty() || it->second.back() != candidates[i])) {
          it->second.push_back(candidates[i]);
        }
      }
    }

    std::size_t covered = 0;
    for (std::size_t t = 0; t < n_tags; ++t) {
      std::vector<std::size_t> open;
      for (std::size_t r : covering[lower(config.region_tags[t])]) {
        if (!taken.contains(r)) open.push_back(r);
      }
      if (open.empty()) continue;
      const std::size_t pick = open[draw_below(rng, open.size())];
      selected.push_back(pick);
      taken.insert(pick);
      ++covered;
    }
    note_shortfall(report, "coverage", config.n_coverage, covered);
  }

  std::vector<Outcome> outcomes(selected.size());
  detail::parallel_ranges(selected.size(), detail::default_threads(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) outcomes[i] = evaluate(records_dir, rows[selected[i]], config.quality);
  });

  report.sampled = selected.size();
  for (auto& o : outcomes) {
    if (o.pair) {
      out.pairs.push_back(std::move(*o.pair));
    } else {
      ++report.discarded;
      ++report.discarded_by_reason[o.reason];
    }
  }
  report.final_count = out.pairs.size();
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<MapCaptionPair>& pairs) {
  std::string text;
  for (const auto& p : pairs) {
    text += nlohmann::json{{"image_ref", p.image_ref}, {"caption", p.caption}}.dump();
    text += '\n';
  }
  write_file_atomic(path, text);
}

std::vector<MapCaptionPair> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open manifest " + path.string());
  std::vector<MapCaptionPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(line_no);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchema, where + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("image_ref") || !doc.contains("caption") ||
        !doc["image_ref"].is_string() || !doc["caption"].is_string()) {
      throw Error(ErrorCode::kSchema, where + ": expected {image_ref, caption} strings");
    }
    MapCaptionPair pair{doc["image_ref"].get<std::string>(), doc["caption"].get<std::string>()};
    if (pair.caption.empty()) throw Error(ErrorCode::kSchema, where + ": empty caption");
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::filesystem::path report_path_for(const std::filesystem::path& manifest) {
  auto p = manifest;
  p.replace_filename(manifest.stem().string() + ".report.json");
  return p;
}

std::vector<std::string> read_region_tags(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open region tags " + path.string());
  std::vector<std::string> tags;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    tags.push_back(line.substr(b, e - b + 1));
  }
  return tags;
}

}  // namespace cartosearch
