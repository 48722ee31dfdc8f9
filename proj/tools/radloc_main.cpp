#include "radloc/cli.hpp"

int main(int argc, char **argv) { return radloc::run_cli(argc, argv); }
