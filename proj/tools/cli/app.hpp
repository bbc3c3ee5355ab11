#pragma once

#include <string>
#include <vector>

namespace cbjj::cli {

enum ExitCode : int {
  kOk = 0,
  kOtherError = 1,
  kConfigError = 2,
  kNumericalError = 3,
  kBudgetError = 4,
};

/// Parses the command line and runs one subcommand; returns the exit status.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace cbjj::cli
