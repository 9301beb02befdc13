#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sdct::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kIo = 2, kFormat = 3, kInvariant = 4 };

/// Runs the `sdct` command line. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdct::cli
