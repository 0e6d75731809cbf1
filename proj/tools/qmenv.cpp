#include <iostream>

#include "qmenv/cli.hpp"

int main(int argc, char** argv) { return qmenv::run_cli(argc, argv, std::cout, std::cerr); }
