#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace poleplan::cli {

// Exit codes shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kInput = 2;
inline constexpr int kInfeasible = 3;

// Entry point behind the `poleplan` binary. `args` excludes the program
// name, e.g. {"plan", "--detections", "d.csv", ...}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace poleplan::cli
