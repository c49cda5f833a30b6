#include <iostream>

#include "nlsal/cli/commands.hpp"

int main(int argc, char** argv) { return nlsal::cli::run_cli(argc, argv, std::cout, std::cerr); }
