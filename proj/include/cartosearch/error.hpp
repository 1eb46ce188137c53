#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cartosearch {

enum class ErrorCode {
  kInvalidQuery,
  kImageDecode,
  kDegenerateVector,
  kDimensionMismatch,
  kRange,
  kNotFound,
  kSchema,
  kFetchFailed,
  kFetchTimeout,
  kConfig,
  kEmptyInput,
  kDimensionConflict,
  kDuplicateId,
  kFormat,
  kCorruption,
  kWrite,
  kEmptyIndex,
  kMissingTitle,
  kAdapter,
};

/// Stable snake_case name, used in error bodies and failure reports.
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cartosearch
