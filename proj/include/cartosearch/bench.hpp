#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cartosearch/search.hpp"

namespace cartosearch {

struct BenchConfig {
  std::size_t queries = 100;
  std::size_t k = 10;
  std::uint64_t seed = 0;
};

struct BenchReport {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t queries = 0;
  std::size_t k = 0;
  double index_seconds = 0.0;  // build, load or generation time of the index
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double mean_ms = 0.0;
  double max_ms = 0.0;

  nlohmann::json to_json() const;
};

/// Nearest-rank percentile (p in (0, 1]) of unsorted samples.
double percentile(std::span<const double> samples, double p);

/// Seeded pseudo-random catalog-style phrases, e.g. "hand colored county map
/// of ohio".
std::vector<std::string> random_text_queries(std::size_t count, std::uint64_t seed);

/// Times end-to-end text searches (embedding, scoring, ranking) one at a
/// time and reports the latency distribution.
BenchReport run_bench(const SearchEngine& engine, const BenchConfig& config);

}  // namespace cartosearch
