#pragma once

#include <string>
#include <vector>

namespace radloc {

/// Command-line driver: verbs simulate, localize, replay, diagnose.
/// Returns the process exit code: 0 success, 2 config error, 3 data error,
/// 4 degenerate likelihood, 1 internal error.
int run_cli(int argc, const char *const *argv);

/// Convenience overload for in-process invocation ("radloc" is prepended).
int run_cli(const std::vector<std::string> &args);

} // namespace radloc
