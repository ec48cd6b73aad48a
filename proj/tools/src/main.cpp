#include "sarbot/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return sarbot::cli::run(argc, argv, std::cout, std::cerr); }
