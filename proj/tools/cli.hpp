#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace arousal::cli {

/// Runs one subcommand; `args` excludes the program name. Returns 0 on success, 1 on a domain error, 2 on a
/// usage error. Diagnostics go to `err`, results to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace arousal::cli
