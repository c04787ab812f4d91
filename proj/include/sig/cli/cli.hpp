#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sig::cli {

/// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitData = 4;
inline constexpr int kExitNumeric = 5;

/// Entry point of the `sig` tool. `args` excludes the program name. Errors
/// are reported on `err` as one line "error: <category>: <message>".
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace sig::cli
