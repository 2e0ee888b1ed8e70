#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace wshift {

inline constexpr std::string_view kToolVersion = "1.0.0";

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitComputation = 1, kExitUsage = 2, kExitRejected = 3 };

/// Runs one command line (without the program name). Diagnostics go to
/// `err` as single lines; results go to files under --out and a short
/// summary to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wshift
