#include "edgesel/commands.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return edgesel::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
