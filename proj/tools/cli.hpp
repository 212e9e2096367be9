#pragma once

#include <iosfwd>

namespace sslab::cli {

// Exit codes shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kIo = 2;
inline constexpr int kValidation = 3;
inline constexpr int kNumeric = 4;

/// Runs one `sslab` invocation in-process. Diagnostics go to `err`, short
/// human-readable summaries to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sslab::cli
