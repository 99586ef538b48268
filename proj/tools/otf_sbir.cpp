#include <iostream>

#include "otf/commands.hpp"

int main(int argc, char** argv) { return otf::run_cli(argc, argv, std::cout, std::cerr); }
