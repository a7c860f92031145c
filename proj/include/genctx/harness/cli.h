#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace genctx::harness {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,      // bad arguments or configuration
  kExitRuntime = 3,     // I/O, integrity, transport, training failure
  kExitAcceptance = 4,  // a run finished but a check did not hold
};

/// Entry point of the `genctx` tool. `args` excludes the program name.
/// Results go to `out`, progress and errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace genctx::harness
