#ifndef MPAGER_CLI_H_
#define MPAGER_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace mpager {

// Process exit codes.
enum ExitStatus : int {
  kExitOk = 0,
  kExitDataError = 1,
  kExitConfigError = 2,
  kExitTransportError = 3,
};

// Runs the `mpager` command line. `args` excludes the program name.
int RunCli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
           std::ostream& err);

}  // namespace mpager

#endif  // MPAGER_CLI_H_
