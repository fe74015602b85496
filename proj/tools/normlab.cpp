#include <iostream>
#include <string>
#include <vector>

#include "normlab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return normlab::run_cli(args, std::cout, std::cerr);
}
