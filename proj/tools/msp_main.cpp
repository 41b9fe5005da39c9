#include "msp/cli.hpp"

int main(int argc, char** argv) { return msp::run_cli(argc, argv); }
