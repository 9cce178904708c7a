#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace replaykit::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kService = 3 };

/// Runs one command line (without the program name). Results go to `out`,
/// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Accepts a fraction in (0, 1] or a percentage in (1, 100].
double normalize_fraction(double value);

}  // namespace replaykit::cli
