#include <iostream>
#include <string>
#include <vector>

#include "locmono/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return locmono::run_cli(args, std::cout, std::cerr);
}
