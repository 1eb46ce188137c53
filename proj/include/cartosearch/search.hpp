#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cartosearch/beto.hpp"
#include "cartosearch/embedder.hpp"
#include "cartosearch/fetch.hpp"
#include "cartosearch/iiif.hpp"

namespace cartosearch {

// -- query fusion ------------------------------------------------------------------

/// Blend weights for a scaling factor alpha in [-1, 1]:
/// image = (1 - alpha) / 2, text = (1 + alpha) / 2.
struct FusionWeights {
  double image;
  double text;
};

/// Throws Error(kRange) outside [-1, 1] (NaN included).
FusionWeights fusion_weights(double alpha);

/// c = ((1 - alpha) * image + (1 + alpha) * text) / 2, evaluated per component
/// in float. alpha = -1 and alpha = 1 return the image or text vector verbatim.
/// The result is not renormalized. Throws Error(kRange) or
/// Error(kDimensionMismatch).
std::vector<float> combine(std::span<const float> image, std::span<const float> text, double alpha);

// -- scoring -------------------------------------------------------------------------

/// Cosine similarity of query against every column. Columns are assumed unit
/// norm, so this is dot(query / ||query||, column). Throws
/// Error(kDegenerateVector) for a zero query and Error(kDimensionMismatch).
std::vector<float> score_all(const BetoIndex& index, std::span<const float> query);

struct Hit {
  std::size_t index;
  float score;

  friend bool operator==(const Hit&, const Hit&) = default;
};

/// Best k (score descending, ties by ascending index); k is clamped to the
/// number of scores.
std::vector<Hit> top_k(std::span<const float> scores, std::size_t k);

/// exp(s - max) / sum(exp(s - max)).
std::vector<double> softmax_top(std::span<const float> scores);

// -- queries ---------------------------------------------------------------------------

enum class SearchMode { kText, kImage, kMultimodal };

struct ImageBytes {
  std::string bytes;
};
struct ImageUrl {
  std::string url;
};
using ImageInput = std::variant<ImageBytes, ImageUrl>;

struct SearchQuery {
  SearchMode mode = SearchMode::kText;
  std::optional<std::string> text;
  std::optional<ImageInput> image;
  double alpha = 0.0;
  std::size_t k = 10;

  /// Throws Error(kInvalidQuery) for missing inputs or k == 0 and
  /// Error(kRange) for alpha outside [-1, 1].
  void validate() const;
};

struct SearchResult {
  std::size_t rank = 0;  // 1-based
  std::size_t column = 0;
  std::string iiif_url;
  std::string resource_url;
  float raw_score = 0.0f;
  double softmax_score = 0.0;
};

struct SearchResponse {
  std::vector<SearchResult> results;
  std::size_t requested_k = 0;
  /// Set when requested_k exceeded the index size.
  bool clamped = false;
};

struct EngineOptions {
  /// Scoring threads; 0 picks hardware concurrency.
  std::size_t threads = 0;
  std::string resource_base = std::string(kDefaultResourceBase);
};

/// Exhaustive cosine top-k over an immutable index. search() is const and
/// safe to call from many threads at once.
class SearchEngine {
 public:
  SearchEngine(BetoIndex index, Embedder embedder, std::shared_ptr<Fetcher> fetcher = nullptr,
               EngineOptions options = {});

  SearchResponse search(const SearchQuery& query) const;

  /// Scores a ready-made query vector and returns ranked results.
  SearchResponse search_vector(std::span<const float> query, std::size_t k) const;

  /// Fused scoring and selection: a single pass over the payload with a
  /// bounded heap per thread and a deterministic merge.
  std::vector<Hit> nearest(std::span<const float> query, std::size_t k) const;

  /// The vector search() scores for this query (after fusion).
  std::vector<float> query_vector(const SearchQuery& query) const;

  const BetoIndex& index() const noexcept { return index_; }
  const Embedder& embedder() const noexcept { return embedder_; }

 private:
  EmbeddingVector embed_image(const ImageInput& image) const;

  BetoIndex index_;
  Embedder embedder_;
  std::shared_ptr<Fetcher> fetcher_;
  EngineOptions options_;
};

/// One-shot search with a test-backend embedder and the default HTTP fetcher.
std::vector<SearchResult> search(const BetoIndex& index, const SearchQuery& query,
                                 const EmbedderConfig& embedder);

}  // namespace cartosearch
