#include "cartosearch/bench.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "cartosearch/error.hpp"

namespace cartosearch {

namespace {

constexpr std::array<std::string_view, 8> kStyles = {
    "hand colored", "tattered and worn", "celestial", "manuscript", "bird's-eye view", "nautical", "topographic",
    "pictorial"};
constexpr std::array<std::string_view, 8> kSubjects = {
    "map", "chart", "atlas plate", "survey", "plan", "panorama", "fire insurance map", "road map"};
constexpr std::array<std::string_view, 10> kPlaces = {
    "ohio", "the pacific coast", "texas", "new york city", "the mississippi river", "virginia", "chesapeake bay",
    "the world", "boston harbor", "california"};

}  // namespace

nlohmann::json BenchReport::to_json() const {
  return {{"n", n},           {"m", m},           {"queries", queries},   {"k", k},
          {"index_seconds", index_seconds},       {"p50_ms", p50_ms},     {"p95_ms", p95_ms},
          {"mean_ms", mean_ms}, {"max_ms", max_ms}};
}

double percentile(std::span<const double> samples, double p) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyInput, "no samples");
  if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorCode::kRange, "percentile must lie in (0, 1]");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted.size())));
  return sorted[std::max<std::size_t>(rank, 1) - 1];
}

std::vector<std::string> random_text_queries(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::string q(kStyles[rng() % kStyles.size()]);
    q += ' ';
    q += kSubjects[rng() % kSubjects.size()];
    q += " of ";
    q += kPlaces[rng() % kPlaces.size()];
    out.push_back(std::move(q));
  }
  return out;
}

BenchReport run_bench(const SearchEngine& engine, const BenchConfig& config) {
  if (config.queries == 0) throw Error(ErrorCode::kConfig, "bench needs at least one query");
  const auto texts = random_text_queries(config.queries, config.seed);
  std::vector<double> latencies;
  latencies.reserve(texts.size());
  for (const auto& text : texts) {
    SearchQuery query;
    query.text = text;
    query.k = config.k;
    const auto start = std::chrono::steady_clock::now();
    const auto response = engine.search(query);
    const auto stop = std::chrono::steady_clock::now();
    if (response.results.empty()) throw Error(ErrorCode::kEmptyIndex, "search returned no results");
    latencies.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  }

  BenchReport report;
  report.n = engine.index().size();
  report.m = engine.index().dim();
  report.queries = latencies.size();
  report.k = config.k;
  report.index_seconds = engine.index().build_seconds();
  report.p50_ms = percentile(latencies, 0.50);
  report.p95_ms = percentile(latencies, 0.95);
  report.mean_ms = std::accumulate(latencies.begin(), latencies.end(), 0.0) / static_cast<double>(latencies.size());
  report.max_ms = *std::max_element(latencies.begin(), latencies.end());
  return report;
}

}  // namespace cartosearch
