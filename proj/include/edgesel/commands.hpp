#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace edgesel {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,     ///< invalid input, I/O error
    exit_usage = 2,       ///< bad command line
    exit_infeasible = 3,  ///< a requested calibration or selection is infeasible
};

/// Runs one command line; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace edgesel
