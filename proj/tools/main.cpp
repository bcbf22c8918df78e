#include "nbwk/cli.hpp"

int main(int argc, char** argv) { return nbwk::cli::main(argc, argv); }
