#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dqaem {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

/// Entry point of the `dqaem` command line. `args` includes the program
/// name. Returns 0 on success, 1 on usage or I/O errors, 2 on numerical
/// failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dqaem
