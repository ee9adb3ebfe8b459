#include <iostream>

#include "flowsentinel/cli.hpp"

int main(int argc, char** argv) { return flowsentinel::cli::run(argc, argv, std::cout, std::cerr); }
