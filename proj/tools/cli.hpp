#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bmpc::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kSolverFailure = 2, kVerificationFailure = 3 };

/// Runs the command line `args` (args[0] is the program name), writing
/// results to `out` and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "start:stop:logN" (N log-spaced values, both ends included),
/// "start:stop:linN", or a comma-separated list.
std::vector<double> parse_sweep(const std::string& text);

}  // namespace bmpc::cli
