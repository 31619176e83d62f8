#include "swphm/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return swphm::cli::run(argc, argv, std::cout, std::cerr); }
