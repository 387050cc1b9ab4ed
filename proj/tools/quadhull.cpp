#include "quadhull/cli.hpp"

int main(int argc, char** argv) { return quadhull::cli::run(argc, argv); }
