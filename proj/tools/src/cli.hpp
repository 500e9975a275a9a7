#pragma once

#include <iosfwd>

namespace switchsynth::cli {

// Exit codes: 0 success, 1 domain failure, 2 usage or schema error.
inline constexpr int kOk = 0;
inline constexpr int kDomainFailure = 1;
inline constexpr int kUsageError = 2;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace switchsynth::cli
