#include "nnsa/experiments.hpp"

int main(int argc, char** argv) { return nnsa::cli_main(argc, argv); }
