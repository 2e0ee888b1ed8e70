#include <iostream>

#include "wshift/cli.hpp"

int main(int argc, char** argv) { return wshift::run_cli(argc, argv, std::cout, std::cerr); }
