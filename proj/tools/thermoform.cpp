#include <iostream>
#include <string>
#include <vector>

#include "thermoform/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return thermoform::run_cli(std::move(args), std::cout, std::cerr);
}
