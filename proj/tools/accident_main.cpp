#include <iostream>

#include "accident/cli/commands.hpp"

int main(int argc, char** argv) { return accident::cli::run(argc, argv, std::cout, std::cerr); }
