#include "mmf/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return mmf::cli::run_cli(argc, argv, std::cout, std::cerr); }
