#include "catcox/cli_io.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return catcox::cli_dispatch(argc, argv, std::cout, std::cerr);
}
