#include "cartosearch/search.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "cartosearch/error.hpp"
#include "parallel.hpp"

namespace cartosearch {

FusionWeights fusion_weights(double alpha) {
  if (!(alpha >= -1.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kRange, "alpha must lie in [-1, 1], got " + std::to_string(alpha));
  }
  return {(1.0 - alpha) / 2.0, (1.0 + alpha) / 2.0};
}

std::vector<float> combine(std::span<const float> image, std::span<const float> text, double alpha) {
  fusion_weights(alpha);  // range check
  if (image.size() != text.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "image and text embeddings differ in dimension");
  }
  if (alpha == 1.0) return {text.begin(), text.end()};
  if (alpha == -1.0) return {image.begin(), image.end()};

  const float a = static_cast<float>(alpha);
  const float wi = 1.0f - a;
  const float wt = 1.0f + a;
  std::vector<float> out(image.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (wi * image[i] + wt * text[i]) / 2.0f;
  return out;
}

namespace {

// Multiple independent accumulators so the compiler can vectorize the loop.
inline float dot(const float* a, const float* b, std::size_t n) noexcept {
  constexpr std::size_t kLanes = 16;
  float acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t j = 0; j < kLanes; ++j) acc[j] += a[i + j] * b[i + j];
  }
  float tail = 0.0f;
  for (; i < n; ++i) tail += a[i] * b[i];
  for (std::size_t width = kLanes / 2; width > 0; width /= 2) {
    for (std::size_t j = 0; j < width; ++j) acc[j] += acc[j + width];
  }
  return acc[0] + tail;
}

// Strict "ranks ahead of": higher score, then lower index.
inline bool ahead(const Hit& a, const Hit& b) noexcept {
  return a.score > b.score || (a.score == b.score && a.index < b.index);
}

// Bounded selection: the heap front is the weakest retained hit.
class TopKHeap {
 public:
  explicit TopKHeap(std::size_t k) : k_(k) { heap_.reserve(k); }

  void offer(Hit hit) {
    if (heap_.size() < k_) {
      heap_.push_back(hit);
      std::push_heap(heap_.begin(), heap_.end(), ahead);
    } else if (ahead(hit, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), ahead);
      heap_.back() = hit;
      std::push_heap(heap_.begin(), heap_.end(), ahead);
    }
  }

  std::vector<Hit>& items() noexcept { return heap_; }

 private:
  std::size_t k_;
  std::vector<Hit> heap_;
};

std::vector<float> unit_query(const BetoIndex& index, std::span<const float> query) {
  if (query.size() != index.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "query has dimension " + std::to_string(query.size()) +
                                                   ", index has " + std::to_string(index.dim()));
  }
  const double norm = l2_norm(query);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::kDegenerateVector, "query vector is zero or non-finite");
  }
  std::vector<float> unit(query.size());
  for (std::size_t i = 0; i < query.size(); ++i) unit[i] = static_cast<float>(query[i] / norm);
  return unit;
}

// Below this many columns threading costs more than it saves.
constexpr std::size_t kParallelThreshold = 1 << 15;

std::size_t scoring_threads(std::size_t configured, std::size_t n) {
  if (n < kParallelThreshold) return 1;
  return configured == 0 ? detail::default_threads() : configured;
}

}  // namespace

std::vector<float> score_all(const BetoIndex& index, std::span<const float> query) {
  const auto unit = unit_query(index, query);
  const std::size_t m = index.dim();
  const float* base = index.matrix().data();
  std::vector<float> scores(index.size());
  detail::parallel_ranges(index.size(), scoring_threads(0, index.size()),
                          [&](std::size_t b, std::size_t e) {
                            for (std::size_t i = b; i < e; ++i) scores[i] = dot(unit.data(), base + i * m, m);
                          });
  return scores;
}

std::vector<Hit> top_k(std::span<const float> scores, std::size_t k) {
  if (k > scores.size()) {
    spdlog::warn("k={} exceeds {} candidates; clamping", k, scores.size());
    k = scores.size();
  }
  TopKHeap heap(k);
  if (k > 0) {
    for (std::size_t i = 0; i < scores.size(); ++i) heap.offer({i, scores[i]});
  }
  auto& out = heap.items();
  std::sort(out.begin(), out.end(), ahead);
  return std::move(out);
}

std::vector<double> softmax_top(std::span<const float> scores) {
  if (scores.empty()) return {};
  const double peak = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(static_cast<double>(scores[i]) - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

void SearchQuery::validate() const {
  if (k == 0) throw Error(ErrorCode::kInvalidQuery, "k must be at least 1");
  fusion_weights(alpha);
  const bool need_text = mode != SearchMode::kImage;
  const bool need_image = mode != SearchMode::kText;
  if (need_text && !text) throw Error(ErrorCode::kInvalidQuery, "query text is required for this mode");
  if (need_image && !image) throw Error(ErrorCode::kInvalidQuery, "query image is required for this mode");
}

SearchEngine::SearchEngine(BetoIndex index, Embedder embedder, std::shared_ptr<Fetcher> fetcher,
                           EngineOptions options)
    : index_(std::move(index)),
      embedder_(std::move(embedder)),
      fetcher_(std::move(fetcher)),
      options_(std::move(options)) {
  if (!index_.empty() && index_.dim() != embedder_.config().dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "index dimension " + std::to_string(index_.dim()) + " does not match embedder dimension " +
                    std::to_string(embedder_.config().dim));
  }
}

std::vector<Hit> SearchEngine::nearest(std::span<const float> query, std::size_t k) const {
  const auto unit = unit_query(index_, query);
  const std::size_t n = index_.size();
  k = std::min(k, n);
  if (k == 0) return {};

  const std::size_t m = index_.dim();
  const float* base = index_.matrix().data();
  std::vector<Hit> merged;
  std::mutex merge_mutex;
  detail::parallel_ranges(n, scoring_threads(options_.threads, n), [&](std::size_t b, std::size_t e) {
    TopKHeap heap(k);
    for (std::size_t i = b; i < e; ++i) heap.offer({i, dot(unit.data(), base + i * m, m)});
    std::lock_guard lock(merge_mutex);
    merged.insert(merged.end(), heap.items().begin(), heap.items().end());
  });
  // (score, index) is a total order, so the merge result is independent of
  // how the ranges were split or in which order threads finished.
  std::sort(merged.begin(), merged.end(), ahead);
  merged.resize(k);
  return merged;
}

SearchResponse SearchEngine::search_vector(std::span<const float> query, std::size_t k) const {
  if (index_.empty()) throw Error(ErrorCode::kEmptyIndex, "index is empty");
  if (k == 0) throw Error(ErrorCode::kInvalidQuery, "k must be at least 1");

  SearchResponse response;
  response.requested_k = k;
  if (k > index_.size()) {
    spdlog::warn("k={} exceeds index size {}; clamping", k, index_.size());
    response.clamped = true;
  }
  const auto hits = nearest(query, k);
  std::vector<float> raw(hits.size());
  std::transform(hits.begin(), hits.end(), raw.begin(), [](const Hit& h) { return h.score; });
  const auto soft = softmax_top(raw);

  response.results.reserve(hits.size());
  for (std::size_t r = 0; r < hits.size(); ++r) {
    SearchResult result;
    result.rank = r + 1;
    result.column = hits[r].index;
    result.iiif_url = index_.url(hits[r].index);
    result.resource_url = resource_url_for(result.iiif_url, options_.resource_base);
    result.raw_score = hits[r].score;
    result.softmax_score = soft[r];
    response.results.push_back(std::move(result));
  }
  return response;
}

EmbeddingVector SearchEngine::embed_image(const ImageInput& image) const {
  if (const auto* bytes = std::get_if<ImageBytes>(&image)) return embedder_.encode_image(bytes->bytes);
  const auto& url = std::get<ImageUrl>(image).url;
  if (!fetcher_) throw Error(ErrorCode::kConfig, "image URL queries need a fetcher");
  return embedder_.encode_image(fetcher_->get(url));
}

std::vector<float> SearchEngine::query_vector(const SearchQuery& query) const {
  query.validate();
  switch (query.mode) {
    case SearchMode::kText: {
      const auto t = embedder_.encode_text(*query.text);
      return {t.values().begin(), t.values().end()};
    }
    case SearchMode::kImage: {
      const auto q = embed_image(*query.image);
      return {q.values().begin(), q.values().end()};
    }
    case SearchMode::kMultimodal: {
      const auto t = embedder_.encode_text(*query.text);
      const auto q = embed_image(*query.image);
      return combine(q.values(), t.values(), query.alpha);
    }
  }
  throw Error(ErrorCode::kInvalidQuery, "unknown search mode");
}

SearchResponse SearchEngine::search(const SearchQuery& query) const {
  query.validate();
  if (index_.empty()) throw Error(ErrorCode::kEmptyIndex, "index is empty");
  return search_vector(query_vector(query), query.k);
}

std::vector<SearchResult> search(const BetoIndex& index, const SearchQuery& query,
                                 const EmbedderConfig& embedder) {
  SearchEngine engine(index, Embedder(embedder), std::make_shared<HttpFetcher>());
  return engine.search(query).results;
}

}  // namespace cartosearch
