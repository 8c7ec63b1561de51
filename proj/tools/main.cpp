#include "stuperf/cli.hpp"

int main(int argc, char** argv) { return stuperf::cli_main(argc, argv); }
