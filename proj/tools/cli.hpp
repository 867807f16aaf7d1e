#pragma once

#include <iosfwd>

namespace l0dc::cli {

enum ExitCode : int { kOk = 0, kSolverFailure = 1, kConfigError = 2 };

/// Runs `l0dc <poisson|control|sparsa|sweep|verify> [options]`. CSV goes to
/// `out` unless --csv names a file; messages go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace l0dc::cli
