#include "vsum/cli.hpp"

int main(int argc, char** argv) { return vsum::cli::run(argc, argv); }
