#pragma once

#include <iosfwd>

namespace cartosearch::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the cartosearch tool. Human-readable and --output json
/// results go to out; diagnostics go to err. Returns the process exit code:
/// 0 success, 1 runtime failure, 2 usage or configuration error.
///
/// Options marked [env] fall back to the named environment variable, then
/// to the built-in default.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cartosearch::cli
