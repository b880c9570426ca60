#include <iostream>

#include "svi/cli.hpp"

int main(int argc, char** argv) { return svi::run_cli(argc, argv, std::cout, std::cerr); }
