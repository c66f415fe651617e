#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stbm::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kInputError = 2, kNumericalFailure = 3 };

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace stbm::cli
