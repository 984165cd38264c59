#include <iostream>

#include "icbo/cli.hpp"

int main(int argc, char **argv) { return icbo::cli::main(argc, argv, std::cout, std::cerr); }
