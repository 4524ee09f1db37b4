#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qhrisk::cli {

enum ExitCode : int {
  kOk = 0,
  /// Parse errors and failed preconditions.
  kUsage = 1,
  /// A verdict or diagnostic failed.
  kVerdictFail = 2,
  /// Quadrature, root finding or an improper integral did not converge.
  kNumeric = 3,
};

/// Runs the command line `args` (without the program name), printing to out
/// and err. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qhrisk::cli
