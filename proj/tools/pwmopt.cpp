#include <iostream>

#include "pwmopt/cli.hpp"

int main(int argc, char** argv) {
  return pwmopt::cli::run(argc, argv, std::cout, std::cerr);
}
