#include <iostream>

#include "atmgad/cli.hpp"

int main(int argc, char** argv) { return atmgad::cli::run(argc, argv, std::cout, std::cerr); }
