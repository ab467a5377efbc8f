#include "premia/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return premia::run_cli(argc, argv, std::cout, std::cerr); }
