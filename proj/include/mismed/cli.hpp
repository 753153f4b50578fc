#pragma once

#include <iosfwd>

namespace mismed {

// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitMissingColumn = 3,
  kExitMediatorCode = 4,
  kExitConfiguration = 5,
  kExitMalformedInput = 6,
  kExitIo = 7,
  kExitNumerical = 8,
  kExitSelfCheck = 9,
};

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace mismed
