#include <iostream>

#include "mpager/cli.h"

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  return mpager::RunCli(std::vector<std::string>(argv + 1, argv + argc), std::cin, std::cout, std::cerr);
}
