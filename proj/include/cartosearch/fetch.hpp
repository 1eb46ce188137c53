#pragma once

#include <chrono>
#include <map>
#include <mutex>
#include <string>
#include <string_view>

#include "cartosearch/error.hpp"

namespace cartosearch {

struct FetchConfig {
  /// Retries after the first attempt; transient failures only (transport
  /// errors, timeouts, 5xx, 429).
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{250};
  /// Requests per second per host; 0 disables limiting.
  double rate_limit_per_host = 10.0;
  std::chrono::milliseconds timeout{30000};
  std::string user_agent = "cartosearch/1.0";
};

/// Raised as kFetchFailed or kFetchTimeout.
class FetchError : public Error {
 public:
  FetchError(ErrorCode code, const std::string& message, int http_status, int attempts)
      : Error(code, message), http_status_(http_status), attempts_(attempts) {}

  /// 0 when no HTTP response was received.
  int http_status() const noexcept { return http_status_; }
  int attempts() const noexcept { return attempts_; }

 private:
  int http_status_;
  int attempts_;
};

class Fetcher {
 public:
  virtual ~Fetcher() = default;
  /// Body of a successful GET. Throws FetchError.
  virtual std::string get(const std::string& url) = 0;
};

/// Spaces requests to one host at least 1/rate apart.
class HostRateLimiter {
 public:
  explicit HostRateLimiter(double per_second) : per_second_(per_second) {}
  void acquire(const std::string& host);

 private:
  double per_second_;
  std::mutex mutex_;
  std::map<std::string, std::chrono::steady_clock::time_point> next_slot_;
};

/// cpp-httplib backed fetcher with retry, exponential backoff and per-host
/// rate limiting. Safe to share across threads.
class HttpFetcher : public Fetcher {
 public:
  explicit HttpFetcher(FetchConfig config = {});
  std::string get(const std::string& url) override;

  const FetchConfig& config() const noexcept { return config_; }

 private:
  FetchConfig config_;
  HostRateLimiter limiter_;
};

/// GETs the width-constrained IIIF rendition of iiif_url.
std::string fetch_image(Fetcher& fetcher, std::string_view iiif_url, int width_px);

}  // namespace cartosearch
