#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace toptdes::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitInvalid = 2;

/// Runs one command line. Data goes to `out` (or the --out file),
/// diagnostics to `err`. Returns 0 on certified success, 1 on numerical
/// failure and 2 on invalid input.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Same, with the arguments after the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace toptdes::cli
