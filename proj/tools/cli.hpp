#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kspec::cli {

enum ExitCode : int { ok = 0, comparison_failed = 1, usage = 2, resource = 3 };

/// Runs the command line with argv[0] omitted. Output goes to --out when given,
/// otherwise to `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kspec::cli
