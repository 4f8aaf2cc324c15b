#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace protoverb::cli {

// Parses `args` (without the program name), runs the subcommand and returns
// the process exit code: 0 success, 1 usage, 2 data or I/O, 3 numerical.
// Every run that reaches a subcommand emits a manifest, next to the primary
// output when there is one, otherwise as a single JSON line on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace protoverb::cli
