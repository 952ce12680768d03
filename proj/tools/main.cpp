#include <iostream>

#include "edaflow/cli.hpp"

int main(int argc, char** argv) {
    std::ios::sync_with_stdio(false);
    return edaflow::dispatch(argc, argv, std::cin, std::cout, std::cerr);
}
