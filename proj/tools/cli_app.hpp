#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hollow::cli {

enum ExitCode : int { ok = 0, usage = 1, data = 2, numerical = 3 };

/// Runs one invocation; args[0] is the program name. Human-readable output goes to
/// `out`, diagnostics to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace hollow::cli
