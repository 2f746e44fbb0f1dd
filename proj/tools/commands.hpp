#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace reclag::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitNumerical = 2;

/// Parses `args` (without the program name), runs the selected subcommand,
/// and writes its manifest. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace reclag::cli
