#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mbar::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kDegenerate = 3 };

/// Runs the command line `args` (args[0] is the program name). The document
/// goes to `out` unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mbar::cli
