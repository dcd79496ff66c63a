#include "wkh/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return wkh::cli::run(argc, argv, std::cout, std::cerr); }
