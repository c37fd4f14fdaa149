#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nodeval {

/// Runs the nodeval command line (subcommands: split, decode, evaluate,
/// check-grads) against the given argument list, writing normal output to
/// `out` and diagnostics to `err`.
///
/// Exit codes: 0 success, 2 input validation, 3 undefined metric,
/// 4 numeric failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace nodeval
