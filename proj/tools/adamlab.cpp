#include <iostream>

#include "adamlab/commands.hpp"

int main(int argc, char** argv) {
  return adamlab::run_cli(argc, argv, std::cout, std::cerr);
}
