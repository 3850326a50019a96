#include <iostream>

#include "lrll/cli.hpp"

int main(int argc, char** argv) {
  return lrll::cli::run(argc, argv, std::cout, std::cerr);
}
