#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "cola/backend.hpp"

namespace cola {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitBackend = 3 };

struct CliEnvironment {
  /// Transport used in live and record modes; null means HTTP to the
  /// configured base_url.
  std::shared_ptr<Transport> transport;
};

/// Runs one CLI invocation. JSON results go to `out`, logs and errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const CliEnvironment& env = {});

}  // namespace cola
