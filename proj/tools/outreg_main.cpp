#include "outreg/cli.hpp"

int main(int argc, char** argv) { return outreg::run_cli(argc, argv); }
