#include "latblock/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return latblock::run_cli(argc, argv, std::cout, std::cerr); }
