#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace clcts::cli {

/// Runs the command line `args` (args[0] is the program name). Returns 0 on
/// success, 1 on invalid input, 2 when a chat endpoint could not be reached.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace clcts::cli
