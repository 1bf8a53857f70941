#include "vtube/cli.hpp"

int main(int argc, char** argv) { return vtube::cli::main(argc, argv); }
