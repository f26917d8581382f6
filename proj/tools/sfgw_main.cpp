#include <iostream>

#include "sfgw/cli.hpp"

int main(int argc, char** argv) { return sfgw::cli_main(argc, argv, std::cout, std::cerr); }
