#include "stgc/cli.hpp"

int main(int argc, char** argv) { return stgc::run_cli(argc, argv); }
