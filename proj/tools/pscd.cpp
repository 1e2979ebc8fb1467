#include <iostream>

#include "pscd/cli.hpp"

int main(int argc, char** argv) { return pscd::run_cli(argc, argv, std::cout, std::cerr); }
