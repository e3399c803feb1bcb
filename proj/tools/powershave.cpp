#include <iostream>

#include "powershave/cli.hpp"

int main(int argc, char** argv) { return powershave::run_cli(argc, argv, std::cout, std::cerr); }
