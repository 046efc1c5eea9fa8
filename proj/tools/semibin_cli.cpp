#include <iostream>

#include "semibin/cli.hpp"

int main(int argc, char** argv) {
    return semibin::main_entry(argc, argv, std::cout, std::cerr);
}
