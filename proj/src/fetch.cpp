#include "cartosearch/fetch.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <thread>

#include "cartosearch/iiif.hpp"

namespace cartosearch {

void HostRateLimiter::acquire(const std::string& host) {
  if (per_second_ <= 0.0) return;
  const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(1.0 / per_second_));
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    auto& next = next_slot_[host];
    slot = std::max(now, next);
    next = slot + interval;
  }
  std::this_thread::sleep_until(slot);
}

HttpFetcher::HttpFetcher(FetchConfig config)
    : config_(std::move(config)), limiter_(config_.rate_limit_per_host) {}

std::string HttpFetcher::get(const std::string& url) {
  const auto parsed = parse_url(url);
  if (!parsed) throw FetchError(ErrorCode::kFetchFailed, "malformed URL: " + url, 0, 0);

  int last_status = 0;
  bool last_was_timeout = false;
  std::string last_detail;
  const int attempts = 1 + std::max(0, config_.max_retries);

  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(config_.backoff_base * (1 << (attempt - 1)));
    }
    limiter_.acquire(parsed->host);

    httplib::Client client(parsed->origin());
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    client.set_follow_location(true);
    const httplib::Headers headers = {{"User-Agent", config_.user_agent}};

    const auto started = std::chrono::steady_clock::now();
    auto res = client.Get(parsed->path_and_query, headers);
    if (!res) {
      const auto err = res.error();
      const auto elapsed = std::chrono::steady_clock::now() - started;
      last_status = 0;
      // httplib reports a read timeout as a plain read error.
      last_was_timeout = err == httplib::Error::ConnectionTimeout ||
                         (err == httplib::Error::Read && elapsed >= config_.timeout * 9 / 10);
      last_detail = httplib::to_string(err);
      spdlog::debug("fetch {} attempt {} failed: {}", url, attempt + 1, last_detail);
      continue;
    }
    if (res->status >= 200 && res->status < 300) return std::move(res->body);

    last_status = res->status;
    last_was_timeout = false;
    last_detail = "HTTP " + std::to_string(res->status);
    const bool transient = res->status >= 500 || res->status == 429 || res->status == 408;
    if (!transient) {
      throw FetchError(ErrorCode::kFetchFailed, url + ": " + last_detail, last_status, attempt + 1);
    }
    spdlog::debug("fetch {} attempt {} got {}", url, attempt + 1, res->status);
  }

  const ErrorCode code = last_was_timeout ? ErrorCode::kFetchTimeout : ErrorCode::kFetchFailed;
  throw FetchError(code,
                   url + ": " + last_detail + " after " + std::to_string(attempts) + " attempts",
                   last_status, attempts);
}

std::string fetch_image(Fetcher& fetcher, std::string_view iiif_url, int width_px) {
  return fetcher.get(iiif_request_url(iiif_url, width_px));
}

}  // namespace cartosearch
