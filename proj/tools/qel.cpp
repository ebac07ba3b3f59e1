#include <iostream>

#include "qel/cli.hpp"

int main(int argc, char** argv) { return qel::cli::main(argc, argv, std::cout, std::cerr); }
