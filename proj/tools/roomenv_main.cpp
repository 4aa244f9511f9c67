#include <iostream>

#include "roomenv/cli.hpp"

int main(int argc, char** argv) { return roomenv::cli::run(argc, argv, std::cout, std::cerr); }
