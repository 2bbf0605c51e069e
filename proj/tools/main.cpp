#include <iostream>

#include "compolab/cli.hpp"

int main(int argc, char** argv) { return compolab::cli::run(argc, argv, std::cout, std::cerr); }
