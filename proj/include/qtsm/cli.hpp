#pragma once

// `qtsm` command-line front end, callable in-process.

#include <ostream>
#include <string>
#include <vector>

namespace qtsm::cli {

enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 2,     ///< bad config, bad usage or failed model validation
  kNumericalError = 3,  ///< ill-conditioned fundamental matrix, overflow, non-finite paths
};

/// Runs one command. `args` excludes the program name. Reports go to `out`,
/// warnings and errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qtsm::cli
