#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace backcast::cli {

// Runs one subcommand. `args` holds the command-line tokens after the
// program name in their original order. Returns the process exit code:
// 0 on success, 1 on usage errors, 2 on data or consistency errors.
int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err);

} // namespace backcast::cli
