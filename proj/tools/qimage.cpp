#include <iostream>

#include "qimage/cli.hpp"

int main(int argc, char** argv) { return qimage::cli::run(argc, argv, std::cout, std::cerr); }
