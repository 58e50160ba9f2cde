#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace phases::cli {

/// Runs the command-line front end on the given arguments (excluding argv[0]),
/// writing results to `out` and usage/diagnostic text to `err`.
/// Returns the process exit code: 0 success, 1 usage/config error,
/// 2 numerical failure or failed verification.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace phases::cli
