#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace outreg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInconsistent = 2;
inline constexpr int kExitUsage = 64;

/// Entry point of the command-line tool. `args` excludes the program name.
///   0   success, report written
///   2   regulator equations inconsistent, report still written
///   1   invalid input or failed validation
///   64  usage error
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, const char* const* argv);

}  // namespace outreg
