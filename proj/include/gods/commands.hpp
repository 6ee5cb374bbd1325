#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gods {

/// Exit codes: 0 success, 1 input error (bad flags, unreadable or malformed
/// files, dimension or schema mismatch), 2 numeric or solver failure.
enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitNumeric = 2 };

/// Runs one CLI command. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gods
