#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace powershave {

enum ExitCode : int { kExitOk = 0, kExitIo = 1, kExitUsage = 2, kExitRampViolation = 3 };

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);  // args exclude argv[0]

}  // namespace powershave
