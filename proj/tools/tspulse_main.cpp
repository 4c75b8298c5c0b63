#include "tspulse/cli.hpp"

int main(int argc, char** argv) { return tspulse::cli::main(argc, argv); }
