#include <iostream>

#include "birthsim/commands.hpp"

int main(int argc, char** argv) { return birthsim::run_cli(argc, argv, std::cout, std::cerr); }
