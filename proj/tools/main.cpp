#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return hapticlab::cli::run(argc, argv, std::cout, std::cerr); }
