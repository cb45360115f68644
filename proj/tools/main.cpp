#include "dualmem/cli.hpp"

int main(int argc, char** argv) { return dualmem::run_cli(argc, argv); }
