#include "mismed/cli.hpp"

int main(int argc, char** argv) { return mismed::run_cli(argc, argv); }
