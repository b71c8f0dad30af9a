#include "tutorlens/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return tutorlens::run_cli(argc, argv, std::cout, std::cerr); }
