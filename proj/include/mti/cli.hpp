#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mti {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNotPd = 3, kExitNumeric = 4 };

// args[0] is the program name. Reports go to out, diagnostics to err.
int runCommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mti
