#include "stripedepth/cli.hpp"

int main(int argc, char** argv) { return stripedepth::cli::run(argc, argv); }
