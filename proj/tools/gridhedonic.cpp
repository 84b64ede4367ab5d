#include "gridhedonic/cli.hpp"

int main(int argc, char** argv) { return gridhedonic::cli::main(argc, argv); }
