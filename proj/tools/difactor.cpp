#include <iostream>
#include <string>
#include <vector>

#include "difactor/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return difactor::run_cli(args, std::cout, std::cerr);
}
