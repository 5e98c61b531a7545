#include "mti/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return mti::runCommand(args, std::cout, std::cerr);
}
