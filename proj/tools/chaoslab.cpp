#include <iostream>

#include "chaoslab/cli.hpp"

int main(int argc, char** argv)
{
    return chaoslab::run_cli(argc, argv, std::cout, std::cerr);
}
