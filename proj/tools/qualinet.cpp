#include "qualinet/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return qualinet::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
