#include <iostream>

#include "dmaop/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dmaop::run_cli(args, std::cout, std::cerr);
}
