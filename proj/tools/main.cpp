#include "fmseg/cli.hpp"

int main(int argc, char** argv) { return fmseg::run_cli(argc, argv); }
