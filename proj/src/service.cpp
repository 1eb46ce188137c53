#include "cartosearch/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "cartosearch/error.hpp"
#include "cartosearch/hashing.hpp"

namespace cartosearch {

namespace {

using nlohmann::json;

HttpResponse json_response(int status, const json& body) {
  return {status, body.dump(), "application/json"};
}

HttpResponse error_response(int status, std::string_view code, std::string_view message) {
  return json_response(status, {{"code", code}, {"message", message}});
}

// Maps library errors raised while serving a query.
HttpResponse from_error(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kInvalidQuery:
    case ErrorCode::kDegenerateVector:
      return error_response(422, to_string(e.code()), e.what());
    case ErrorCode::kImageDecode:
      return error_response(415, to_string(e.code()), e.what());
    case ErrorCode::kRange:
    case ErrorCode::kSchema:
      return error_response(400, to_string(e.code()), e.what());
    case ErrorCode::kFetchFailed:
    case ErrorCode::kFetchTimeout:
      return error_response(502, to_string(e.code()), e.what());
    case ErrorCode::kEmptyIndex:
      return error_response(503, to_string(e.code()), e.what());
    default:
      return error_response(500, to_string(e.code()), e.what());
  }
}

// Request validation failure carrying its HTTP response.
struct Reject {
  HttpResponse response;
};

[[noreturn]] void reject(int status, std::string_view code, std::string_view message) {
  throw Reject{error_response(status, code, message)};
}

enum class ScoreFields { kRaw, kSoftmax, kBoth };

std::size_t read_k(const json& body, std::size_t max_k) {
  if (!body.contains("k")) return std::min<std::size_t>(10, max_k);
  const auto& k = body["k"];
  if (!k.is_number_integer() || k.get<std::int64_t>() < 1) reject(400, "invalid_k", "k must be a positive integer");
  const auto value = k.get<std::uint64_t>();
  if (value > max_k) reject(400, "invalid_k", "k must not exceed " + std::to_string(max_k));
  return static_cast<std::size_t>(value);
}

ScoreFields read_scores(const json& body) {
  if (!body.contains("scores")) return ScoreFields::kBoth;
  const auto& s = body["scores"];
  if (s == "raw") return ScoreFields::kRaw;
  if (s == "softmax") return ScoreFields::kSoftmax;
  if (s == "both") return ScoreFields::kBoth;
  reject(400, "invalid_body", "scores must be \"raw\", \"softmax\" or \"both\"");
}

std::string read_text(const json& body, const char* field) {
  if (!body.contains(field) || !body[field].is_string()) {
    reject(400, "invalid_body", std::string(field) + " must be a string");
  }
  return body[field].get<std::string>();
}

json render(const SearchResponse& response, ScoreFields fields) {
  json results = json::array();
  for (const auto& r : response.results) {
    json item = {{"rank", r.rank}, {"iiif_url", r.iiif_url}, {"resource_url", r.resource_url}};
    if (fields != ScoreFields::kSoftmax) item["raw_score"] = r.raw_score;
    if (fields != ScoreFields::kRaw) item["softmax_score"] = r.softmax_score;
    results.push_back(std::move(item));
  }
  json out = {{"results", std::move(results)}, {"k", response.requested_k}, {"returned", response.results.size()}};
  if (response.clamped) {
    out["warning"] = "k=" + std::to_string(response.requested_k) + " exceeds index size; returned " +
                     std::to_string(response.results.size());
  }
  return out;
}

}  // namespace

void ServiceConfig::validate() const {
  if (max_k < 1) throw Error(ErrorCode::kConfig, "max_k must be at least 1");
  if (port < 0 || port > 65535) throw Error(ErrorCode::kConfig, "port out of range");
  if (max_image_bytes == 0) throw Error(ErrorCode::kConfig, "max_image_bytes must be positive");
  if (static_dir && !std::filesystem::is_directory(*static_dir)) {
    throw Error(ErrorCode::kConfig, "static directory not found: " + static_dir->string());
  }
  embedder.validate();
}

SearchService::SearchService(ServiceConfig config, std::shared_ptr<Fetcher> fetcher, EmbeddingAdapter adapter)
    : config_(std::move(config)),
      fetcher_(fetcher ? std::move(fetcher) : std::make_shared<HttpFetcher>()),
      embedder_(config_.embedder, std::move(adapter)) {
  config_.validate();
}

SearchService::~SearchService() { stop(); }

void SearchService::load_index() { install_index(cartosearch::load_index(config_.index_path)); }

void SearchService::load_index_async() {
  loader_ = std::jthread([this] {
    try {
      load_index();
      spdlog::info("index loaded from {}", config_.index_path.string());
    } catch (const std::exception& e) {
      spdlog::error("index load failed: {}", e.what());
      std::lock_guard lock(mutex_);
      load_error_ = e.what();
    }
  });
}

void SearchService::install_index(BetoIndex index) {
  auto engine = std::make_shared<const SearchEngine>(std::move(index), embedder_, fetcher_,
                                                     EngineOptions{0, config_.resource_base});
  std::lock_guard lock(mutex_);
  engine_ = std::move(engine);
  load_error_.clear();
}

bool SearchService::ready() const { return engine() != nullptr; }

std::shared_ptr<const SearchEngine> SearchService::engine() const {
  std::lock_guard lock(mutex_);
  return engine_;
}

HttpResponse SearchService::handle(std::string_view method, std::string_view path, std::string_view body) const {
  if (method == "OPTIONS") return {204, "", "text/plain"};

  const bool is_search = path == "/v1/search/text" || path == "/v1/search/image" || path == "/v1/search/multimodal";
  const bool is_get = path == "/v1/health" || path == "/v1/index/stats";
  if (!is_search && !is_get) return error_response(404, "not_found", "no such endpoint");
  if (is_search && method != "POST") return error_response(405, "method_not_allowed", "use POST");
  if (is_get && method != "GET") return error_response(405, "method_not_allowed", "use GET");

  const auto current = engine();
  if (!current) {
    std::string load_error;
    {
      std::lock_guard lock(mutex_);
      load_error = load_error_;
    }
    auto response = load_error.empty() ? error_response(503, "index_not_loaded", "index is loading")
                                       : error_response(503, "index_load_failed", load_error);
    if (path == "/v1/health") {
      auto doc = json::parse(response.body);
      doc["status"] = load_error.empty() ? "loading" : "failed";
      response.body = doc.dump();
    }
    return response;
  }

  if (path == "/v1/health") return json_response(200, {{"status", "ok"}});
  if (path == "/v1/index/stats") {
    const auto s = stats(current->index());
    return json_response(200, {{"n", s.n},
                               {"m", s.m},
                               {"bytes", s.bytes_on_disk},
                               {"build_duration_seconds", s.build_duration_seconds}});
  }
  if (path == "/v1/search/text") return search(SearchMode::kText, body);
  if (path == "/v1/search/image") return search(SearchMode::kImage, body);
  return search(SearchMode::kMultimodal, body);
}

HttpResponse SearchService::search(SearchMode mode, std::string_view body) const {
  const auto current = engine();
  try {
    json doc;
    try {
      doc = json::parse(body);
    } catch (const json::exception& e) {
      reject(400, "invalid_body", std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) reject(400, "invalid_body", "body must be a JSON object");

    SearchQuery query;
    query.mode = mode;
    query.k = read_k(doc, config_.max_k);
    const auto fields = read_scores(doc);

    if (mode == SearchMode::kText) query.text = read_text(doc, "query");
    if (mode == SearchMode::kMultimodal) {
      query.text = read_text(doc, "text");
      if (doc.contains("alpha")) {
        if (!doc["alpha"].is_number()) reject(400, "invalid_body", "alpha must be a number");
        query.alpha = doc["alpha"].get<double>();
      }
      if (!(query.alpha >= -1.0 && query.alpha <= 1.0)) {
        reject(400, to_string(ErrorCode::kRange), "alpha must lie in [-1, 1]");
      }
    }

    if (mode != SearchMode::kText) {
      const bool has_url = doc.contains("url") && !doc["url"].is_null();
      const bool has_b64 = doc.contains("image_b64") && !doc["image_b64"].is_null();
      if (has_url == has_b64) reject(400, "invalid_image_fields", "provide exactly one of url and image_b64");
      std::string bytes;
      if (has_b64) {
        if (!doc["image_b64"].is_string()) reject(400, "invalid_body", "image_b64 must be a string");
        try {
          bytes = base64_decode(doc["image_b64"].get<std::string>());
        } catch (const Error&) {
          reject(400, "invalid_body", "image_b64 is not valid base64");
        }
      } else {
        if (!doc["url"].is_string()) reject(400, "invalid_body", "url must be a string");
        const auto url = doc["url"].get<std::string>();
        try {
          bytes = fetcher_->get(url);
        } catch (const FetchError& e) {
          throw Reject{json_response(502, {{"code", to_string(e.code())},
                                           {"message", e.what()},
                                           {"url", url},
                                           {"http_status", e.http_status()},
                                           {"attempts", e.attempts()}})};
        }
      }
      if (bytes.size() > config_.max_image_bytes) {
        reject(413, "payload_too_large", "image exceeds " + std::to_string(config_.max_image_bytes) + " bytes");
      }
      query.image = ImageBytes{std::move(bytes)};
    }

    return json_response(200, render(current->search(query), fields));
  } catch (const Reject& r) {
    return r.response;
  } catch (const Error& e) {
    return from_error(e);
  }
}

void SearchService::configure_server() {
  server_ = std::make_unique<httplib::Server>();
  auto& srv = *server_;
  const auto timeout = config_.request_timeout;
  srv.set_read_timeout(timeout);
  srv.set_write_timeout(timeout);
  // Base64 inflates by 4/3; leave headroom for the other fields.
  srv.set_payload_max_length(config_.max_image_bytes / 3 * 4 + (1u << 20));
  if (config_.static_dir) srv.set_mount_point("/", config_.static_dir->string());

  const auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    const auto out = handle(req.method, req.path, req.body);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  srv.Get("/v1/.*", dispatch);
  srv.Post("/v1/.*", dispatch);
  srv.Put("/v1/.*", dispatch);
  srv.Delete("/v1/.*", dispatch);
  srv.Options("/v1/.*", dispatch);

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    const std::string code = res.status == 413 ? "payload_too_large" : res.status == 404 ? "not_found" : "http_error";
    res.set_content(json{{"code", code}, {"message", httplib::status_message(res.status)}}.dump(),
                    "application/json");
  });
  srv.set_post_routing_handler([origin = config_.cors_origin](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  srv.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    spdlog::debug("{} {} -> {}", req.method, req.path, res.status);
  });
}

int SearchService::start() {
  configure_server();
  int port = config_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(config_.host);
  } else if (!server_->bind_to_port(config_.host, port)) {
    port = -1;
  }
  if (port < 0) throw Error(ErrorCode::kConfig, "cannot bind " + config_.host + ":" + std::to_string(config_.port));
  server_thread_ = std::jthread([srv = server_.get()] { srv->listen_after_bind(); });
  server_->wait_until_ready();
  spdlog::info("serving on {}:{}", config_.host, port);
  return port;
}

void SearchService::listen() {
  start();
  server_thread_.join();
}

void SearchService::stop() {
  if (server_) server_->stop();
  if (server_thread_.joinable()) server_thread_.join();
  if (loader_.joinable()) loader_.join();
}

}  // namespace cartosearch
