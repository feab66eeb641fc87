#include <iostream>

#include "citeforge/cli.hpp"

int main(int argc, char** argv) { return citeforge::cli::run(argc, argv, std::cout, std::cerr); }
