#include <iostream>
#include <string>
#include <vector>

#include "g5/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return g5::cli::run(args, std::cout, std::cerr);
}
