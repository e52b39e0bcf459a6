#include <iostream>
#include <string>
#include <vector>

#include "isa2/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return isa2::run_cli(args, std::cout, std::cerr);
}
