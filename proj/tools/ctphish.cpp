#include "ctphish/cli/cli.hpp"

int main(int argc, char** argv) { return ctphish::cli::run(argc, argv); }
