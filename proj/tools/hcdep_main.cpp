#include <iostream>

#include "hcdep/cli.hpp"

int main(int argc, char** argv) { return hcdep::run_cli(argc, argv, std::cout, std::cerr); }
