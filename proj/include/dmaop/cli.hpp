#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dmaop {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 1,         // malformed input or config
  kExitIterationCap = 2,  // solve stopped without converging
  kExitVerifyFailed = 3,  // verify found a violated constraint
  kExitInternal = 4,
};

/// Runs `dmaop <subcommand> ...`; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dmaop
