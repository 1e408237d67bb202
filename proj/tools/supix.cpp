#include <iostream>
#include <string>
#include <vector>

#include "supix/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return supix::cli::run(args, std::cout, std::cerr);
}
