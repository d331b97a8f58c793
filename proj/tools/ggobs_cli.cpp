#include "ggobs/cli.hpp"

int main(int argc, char** argv) { return ggobs::cli::run(argc, argv); }
