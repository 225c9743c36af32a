#include <iostream>
#include <string>
#include <vector>

#include "bagsparse/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return bagsparse::cli::run(args, std::cout, std::cerr);
}
