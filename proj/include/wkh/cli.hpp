#pragma once

#include <iosfwd>

namespace wkh::cli {

// Exit codes of the command-line tool.
constexpr int kOk = 0;
constexpr int kFailure = 1;      // runtime error or failed verification
constexpr int kConfigError = 2;  // invalid config or flags

// Entry point shared by the executable and the tests. argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wkh::cli
