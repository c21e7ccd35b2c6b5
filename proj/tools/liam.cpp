#include <iostream>

#include "liam/io/cli.hpp"

int main(int argc, char** argv) { return liam::io::cli_main(argc, argv, std::cout, std::cerr); }
