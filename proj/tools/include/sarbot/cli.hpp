#pragma once

#include <iosfwd>

namespace sarbot::cli {

enum ExitCode : int {
  kExitSuccess = 0,
  kExitNoSuccess = 2,
  kExitAbort = 3,
  kExitConfigError = 4,
};

// Entry point behind the `sarbot` binary; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sarbot::cli
