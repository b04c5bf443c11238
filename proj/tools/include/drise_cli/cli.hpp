// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace drise::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUser = 1,      // bad arguments, configuration or input files
  kExitProtocol = 2,  // detector protocol failure
  kExitInternal = 3,
};

/// Entry point of the `drise` tool. `args[0]` is the program name.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace drise::cli
