#include "cartosearch/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "cartosearch/catalog.hpp"
#include "cartosearch/error.hpp"
#include "cartosearch/iiif.hpp"

namespace cartosearch {

nlohmann::json PipelineReport::to_json() const {
  nlohmann::json doc;
  doc["processed"] = processed;
  doc["skipped_existing"] = skipped_existing;
  doc["failed"] = failed;
  doc["rows_consumed"] = rows_consumed();
  auto& list = doc["failures"] = nlohmann::json::array();
  for (const auto& f : failures) {
    list.push_back({{"row", f.row_number},
                    {"iiif_url", f.iiif_url},
                    {"error_class", f.error_class},
                    {"message", f.message}});
  }
  return doc;
}

namespace {

void ensure_writable(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kConfig, "output directory is not usable: " + dir.string());
  }
  const auto probe = dir / ".cartosearch-write-probe";
  {
    std::ofstream out(probe);
    if (!out) throw Error(ErrorCode::kConfig, "output directory is not writable: " + dir.string());
  }
  std::filesystem::remove(probe, ec);
}

std::string with_json_format(const std::string& resource_url) {
  return resource_url + (resource_url.find('?') == std::string::npos ? "?" : "&") + "fo=json";
}

nlohmann::json build_metadata(const CatalogRow& row, Fetcher& fetcher, bool fetch_api) {
  nlohmann::json meta;
  meta["iiif_id"] = row.iiif_id;
  meta["resource_id"] = derive_resource_id(row.iiif_id);
  meta["resource_url"] = row.resource_url;
  if (row.file_size) meta["file_size"] = *row.file_size;
  if (!row.collection_context.empty()) meta["collection_context"] = row.collection_context;

  if (fetch_api && parse_url(row.resource_url)) {
    const std::string body = fetcher.get(with_json_format(row.resource_url));
    auto api = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
    if (api.is_discarded() || !api.is_object()) {
      throw Error(ErrorCode::kSchema, "metadata response is not a JSON object");
    }
    meta["item"] = api.contains("item") ? api["item"] : api;
  }
  return meta;
}

// Single-producer, multi-consumer queue with a fixed capacity.
class RowQueue {
 public:
  explicit RowQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(CatalogEntry entry) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return items_.size() < capacity_; });
    items_.push_back(std::move(entry));
    not_empty_.notify_one();
  }

  std::optional<CatalogEntry> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    CatalogEntry entry = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return entry;
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    not_empty_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::mutex mutex_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<CatalogEntry> items_;
  bool closed_ = false;
};

}  // namespace

PipelineReport run_pipeline(const std::filesystem::path& catalog,
                            const std::filesystem::path& out_dir, const Embedder& embedder,
                            Fetcher& fetcher, const PipelineOptions& options) {
  if (options.workers < 1) throw Error(ErrorCode::kConfig, "workers must be >= 1");
  CatalogReader reader(catalog);
  ensure_writable(out_dir);

  PipelineReport report;
  std::mutex report_mutex;
  std::unordered_set<std::string> claimed;
  auto record_failure = [&](const CatalogEntry& entry, std::string error_class, std::string message) {
    std::lock_guard lock(report_mutex);
    ++report.failed;
    report.failures.push_back({entry.row_number, entry.iiif_url, std::move(error_class), std::move(message)});
  };

  const int width = embedder.config().image_width_px;
  auto process = [&](const CatalogEntry& entry) {
    const CatalogRow& row = *entry.row;
    const std::string filename = record_filename(row.iiif_id);
    const auto target = out_dir / filename;
    {
      // A repeated IIIF ID within one run counts as already present.
      std::lock_guard lock(report_mutex);
      if (!claimed.insert(filename).second || std::filesystem::exists(target)) {
        ++report.skipped_existing;
        return;
      }
    }
    try {
      EmbeddingRecord record;
      record.iiif_url = row.iiif_url;
      record.embedding = embedder.encode_image(fetch_image(fetcher, row.iiif_url, width));
      if (options.variant == RecordVariant::kFull) {
        record.metadata = build_metadata(row, fetcher, options.fetch_metadata);
      }
      write_record_atomic(target, record);
      std::lock_guard lock(report_mutex);
      ++report.processed;
    } catch (const Error& e) {
      spdlog::warn("row {} ({}) failed: {}", entry.row_number, row.iiif_url, e.what());
      record_failure(entry, std::string(to_string(e.code())), e.what());
    } catch (const std::exception& e) {
      spdlog::warn("row {} ({}) failed: {}", entry.row_number, row.iiif_url, e.what());
      record_failure(entry, "internal", e.what());
    }
  };

  RowQueue queue(options.workers * 4);
  std::vector<std::jthread> pool;
  pool.reserve(options.workers);
  for (std::size_t w = 0; w < options.workers; ++w) {
    pool.emplace_back([&] {
      while (auto entry = queue.pop()) process(*entry);
    });
  }

  std::size_t consumed = 0;
  try {
    while (!options.limit || consumed < *options.limit) {
      auto entry = reader.next();
      if (!entry) break;
      ++consumed;
      if (!entry->ok()) {
        spdlog::warn("catalog row {} malformed: {}", entry->row_number, entry->error);
        record_failure(*entry, std::string(to_string(ErrorCode::kSchema)), entry->error);
        continue;
      }
      queue.push(std::move(*entry));
    }
  } catch (...) {
    queue.close();
    throw;
  }
  queue.close();
  pool.clear();  // joins

  std::sort(report.failures.begin(), report.failures.end(),
            [](const RowFailure& a, const RowFailure& b) { return a.row_number < b.row_number; });
  return report;
}

PipelineReport run_pipeline(const std::filesystem::path& catalog,
                            const std::filesystem::path& out_dir, std::size_t workers,
                            RecordVariant variant, const EmbedderConfig& embedder) {
  HttpFetcher fetcher;
  PipelineOptions options;
  options.workers = workers;
  options.variant = variant;
  return run_pipeline(catalog, out_dir, Embedder(embedder), fetcher, options);
}

}  // namespace cartosearch
