#include "qphase/harness/cli.hpp"

int main(int argc, char** argv) { return qphase::harness::cli_main(argc, argv); }
