#pragma once

#include <string>
#include <vector>

namespace msp {

// Command-line entry point, callable in-process so the tests can drive
// it.  `args` excludes the program name.  Returns the process exit code:
// 0 ok, 2 config error, 3 data error, 4 estimation failure, 5 internal.
int run_cli(const std::vector<std::string>& args);

int run_cli(int argc, const char* const* argv);

}  // namespace msp
