#include <iostream>

#include "figforge/cli/cli.hpp"

int main(int argc, char** argv) {
  return figforge::cli::run(argc, argv, std::cout, std::cerr);
}
