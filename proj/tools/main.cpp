#include <iostream>

#include "tagrank/cli.hpp"

int main(int argc, char** argv) {
  return tagrank::cli::run(argc, argv, std::cout, std::cerr);
}
