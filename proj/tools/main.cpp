#include "cli.hpp"

int main(int argc, char** argv) { return sobcomp::cli::run(argc, argv); }
