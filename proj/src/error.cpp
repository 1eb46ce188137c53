#include "cartosearch/error.hpp"

namespace cartosearch {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidQuery: return "invalid_query";
    case ErrorCode::kImageDecode: return "image_decode";
    case ErrorCode::kDegenerateVector: return "degenerate_vector";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kRange: return "out_of_range";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kFetchFailed: return "fetch_failed";
    case ErrorCode::kFetchTimeout: return "fetch_timeout";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kDimensionConflict: return "dimension_conflict";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kCorruption: return "corruption";
    case ErrorCode::kWrite: return "write";
    case ErrorCode::kEmptyIndex: return "empty_index";
    case ErrorCode::kMissingTitle: return "missing_title";
    case ErrorCode::kAdapter: return "adapter";
  }
  return "unknown";
}

}  // namespace cartosearch
