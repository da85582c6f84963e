#include "mpcguard/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return mpcguard::cli::main(argc, argv, std::cout, std::cerr); }
