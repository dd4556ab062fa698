// Command-line front end.  The whole CLI is a pure function from an argument
// vector and a pair of output streams to an exit code, so tests drive it
// in-process without spawning.  Exit codes: 0 success, 1 input error,
// 2 verification failure.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ridemix {

int cli_run(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace ridemix
