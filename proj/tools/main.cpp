#include <iostream>

#include "cli_commands.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return contractnet::cli::run_cli(args, std::cout, std::cerr);
}
