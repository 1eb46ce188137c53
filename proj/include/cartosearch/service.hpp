#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include "cartosearch/beto.hpp"
#include "cartosearch/embedder.hpp"
#include "cartosearch/fetch.hpp"
#include "cartosearch/search.hpp"

namespace httplib {
class Server;
}

namespace cartosearch {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 binds an ephemeral port
  std::filesystem::path index_path;
  EmbedderConfig embedder;
  std::size_t max_k = 100;
  std::chrono::seconds request_timeout{30};
  /// Served at "/" when set (the web console bundle).
  std::optional<std::filesystem::path> static_dir;
  std::string cors_origin = "*";
  std::size_t max_image_bytes = 20u << 20;
  std::string resource_base = std::string(kDefaultResourceBase);

  /// Throws Error(kConfig).
  void validate() const;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// JSON API under /v1:
///   POST /v1/search/text        {query, k, scores}
///   POST /v1/search/image       {url | image_b64, k, scores}
///   POST /v1/search/multimodal  {text, url | image_b64, alpha, k, scores}
///   GET  /v1/index/stats
///   GET  /v1/health
///
/// Results are {"results": [{rank, iiif_url, resource_url, raw_score,
/// softmax_score}], "k", "returned"} plus "warning" when k was clamped. The
/// body never echoes the request, so equal rankings give equal bytes. Errors
/// are {"code", "message"} with 400 (bad body, k, alpha or image fields),
/// 413 (image too large), 415 (undecodable image), 422 (empty query),
/// 502 (image fetch failed) and 503 (index not loaded).
class SearchService {
 public:
  explicit SearchService(ServiceConfig config, std::shared_ptr<Fetcher> fetcher = nullptr,
                         EmbeddingAdapter adapter = {});
  ~SearchService();

  SearchService(const SearchService&) = delete;
  SearchService& operator=(const SearchService&) = delete;

  /// Loads config.index_path on this thread. Throws on failure.
  void load_index();
  /// Loads config.index_path on a background thread; requests get 503 until
  /// it finishes.
  void load_index_async();
  /// Serves an index that is already in memory.
  void install_index(BetoIndex index);
  bool ready() const;

  /// Transport-independent dispatch; the HTTP server calls this.
  HttpResponse handle(std::string_view method, std::string_view path, std::string_view body) const;

  /// Binds and starts serving on a background thread; returns the bound port.
  int start();
  /// Binds and serves on the calling thread until stop().
  void listen();
  void stop();

 private:
  std::shared_ptr<const SearchEngine> engine() const;
  HttpResponse search(SearchMode mode, std::string_view body) const;
  void configure_server();

  ServiceConfig config_;
  std::shared_ptr<Fetcher> fetcher_;
  Embedder embedder_;

  mutable std::mutex mutex_;
  std::shared_ptr<const SearchEngine> engine_;
  std::string load_error_;

  std::unique_ptr<httplib::Server> server_;
  std::jthread loader_;
  std::jthread server_thread_;
};

}  // namespace cartosearch
