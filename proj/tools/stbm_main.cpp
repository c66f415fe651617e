#include "stbm/cli.hpp"

int main(int argc, char** argv) { return stbm::cli::run(argc, argv); }
