#include <iostream>

#include "illc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return illc::cli::run(args, std::cout, std::cerr);
}
