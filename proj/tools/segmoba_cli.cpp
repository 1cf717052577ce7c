#include <iostream>

#include "segmoba/bench.hpp"

int main(int argc, char** argv) { return segmoba::run_cli(argc, argv, std::cout, std::cerr); }
