#include "xcoref/cli.hpp"

int main(int argc, char** argv) { return xcoref::cli::run(argc, argv); }
