#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qurious::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUser = 1;
inline constexpr int kExitInternal = 2;

/// Runs the command line `args` (args[0] is the program name). The run
/// manifest goes to `out` unless --manifest names a file; diagnostics go to
/// `err` as a single line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qurious::cli
