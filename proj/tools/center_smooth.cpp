#include <iostream>

#include "center_smoothing/cli.hpp"

int main(int argc, char** argv) {
    return csmooth::cli::run(argc, argv, std::cout, std::cerr);
}
