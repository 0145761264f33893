#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace conespec {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitAssertionFailed = 1,
  kExitParseError = 2,
  kExitNumericalFailure = 3,
  kExitUndecided = 4,
};

/// Runs `conespec <subcommand> ...`; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace conespec
