#include <iostream>

#include "ddi/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return ddi::cli::dispatch(args, std::cout, std::cerr);
}
