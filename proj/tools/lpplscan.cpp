#include <iostream>

#include "lpplscan/cli.hpp"

int main(int argc, char** argv) { return lppl::cli::run(argc, argv, std::cout, std::cerr); }
