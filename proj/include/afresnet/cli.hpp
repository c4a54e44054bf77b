#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace afresnet {

inline constexpr const char* kVersion = "afresnet 1.0.0";

// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumeric = 3,
};

// Runs one command line (args exclude the program name). Results go to
// `out`, provenance and diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace afresnet
