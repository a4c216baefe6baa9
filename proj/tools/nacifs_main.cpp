#include "nacifs/cli.hpp"

int main(int argc, char** argv) { return nacifs::run_cli(argc, argv); }
