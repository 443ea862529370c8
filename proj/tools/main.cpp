#include <iostream>

#include "fmmbem/cli/commands.hpp"

int main(int argc, char** argv) { return fmmbem::cli::run(argc, argv, std::cout, std::cerr); }
