#include <iostream>
#include <string>
#include <vector>

#include "embroid/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return embroid::cli::run(args, std::cout, std::cerr);
}
