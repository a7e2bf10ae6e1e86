#include <iostream>

#include "epochsim/harness.hpp"

int main(int argc, char** argv)
{
    return epochsim::run_cli(argc, argv, std::cout, std::cerr);
}
