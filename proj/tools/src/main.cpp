// SPDX-License-Identifier: Apache-2.0
#include "drise_cli/cli.hpp"

int main(int argc, char** argv) { return drise::cli::run(argc, argv); }
