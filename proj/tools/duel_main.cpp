#include "duel/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return duel::cli::run(argc, argv, std::cout, std::cerr); }
