#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xcoref::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kIo = 3,
  kParse = 4,
  kInvariant = 5,
  kNumeric = 6,
};

// Entry point of the `xcoref` binary. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace xcoref::cli
