#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace illc::cli {

// Process exit codes.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kIoError = 3;
inline constexpr int kNumericError = 4;

// Runs the command line `args` (args[0] is the program name). Never
// throws; errors are written to `err` and mapped to an exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace illc::cli
