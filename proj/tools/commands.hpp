#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace famc::cli {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

/// Runs the command line with reports on `out` and diagnostics on `err`.
/// Returns the process exit code. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Worker count for reproduce: FAM_THREADS when set to a positive integer,
/// otherwise the hardware concurrency.
int thread_count();

}  // namespace famc::cli
