#pragma once

#include <iosfwd>

namespace hapticlab::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kConfig = 2, kNumerical = 3 };

/// Runs the command line with the given arguments (argv[0] is the program name).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hapticlab::cli
