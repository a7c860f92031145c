#include <iostream>
#include <string>
#include <vector>

#include "genctx/harness/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return genctx::harness::run_cli(args, std::cout, std::cerr);
}
