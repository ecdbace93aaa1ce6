#include "htnsat/cli.hpp"

int main(int argc, char** argv) { return htnsat::run_cli(argc, argv); }
