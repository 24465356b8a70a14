#include <iostream>

#include "pheno/cli.hpp"

int main(int argc, char** argv) { return pheno::cli::run(argc, argv, std::cout, std::cerr); }
