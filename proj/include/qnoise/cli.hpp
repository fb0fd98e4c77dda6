#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qnoise::cli {

/// Exit codes: 0 success, 1 failed check or physically invalid input,
/// 2 usage, configuration or I/O error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// `qnoise <validate|synthesize|simulate|sweep> --config FILE [--out DIR]
/// [--seed N] [--tol X]`.  args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

} // namespace qnoise::cli
