#include <iostream>

#include "eos/cli.hpp"

int main(int argc, char** argv) { return eos::cli::run_cli(argc, argv, std::cout, std::cerr); }
