#include <iostream>

#include "mfg/cli.hpp"

int main(int argc, char** argv) { return mfg::cli::main(argc, argv, std::cout, std::cerr); }
