#pragma once

#include <iosfwd>

namespace lppl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;  // bad flags, unreadable or invalid input data
inline constexpr int kExitFit = 3;    // calibration or estimation produced no result

// Entry point of the `lpplscan` tool. Help and summaries go to `out`; errors
// are written to `err` as a single-line JSON object.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lppl::cli
