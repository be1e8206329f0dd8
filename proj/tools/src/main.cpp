#include "nmtk/cli.hpp"

int main(int argc, char** argv) { return nmtk::cli::run(argc, argv); }
