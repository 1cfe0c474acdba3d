#include <iostream>

#include "chaoslab/cli.hpp"

int main(int argc, char** argv) {
    return chaoslab::cli::dispatch(argc, argv, std::cout, std::cerr);
}
