#include <iostream>

#include "hdrfuse/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hdr::cli::run(args, std::cout, std::cerr);
}
