#include <iostream>

#include "evonet/cli.hpp"

int main(int argc, char** argv) { return evonet::run_cli(argc, argv, std::cout, std::cerr); }
