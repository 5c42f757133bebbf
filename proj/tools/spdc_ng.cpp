#include <iostream>

#include "spdcng/cli.hpp"

int main(int argc, char** argv) { return spdcng::cli::run(argc, argv, std::cout, std::cerr); }
