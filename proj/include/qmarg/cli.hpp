#pragma once

// Command dispatch for the qmarg tool, kept in the library so tests can drive it
// without spawning processes.

#include <ostream>
#include <string>
#include <vector>

namespace qmarg {

namespace exit_code {
constexpr int kOk = 0;
constexpr int kUsage = 1;      // parse, validation and I/O failures
constexpr int kBlocked = 2;    // check: blocked; construct / counterexample: module error
constexpr int kInfeasible = 3;
constexpr int kUndecided = 4;
}  // namespace exit_code

// args excludes the program name. Reports go to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qmarg
