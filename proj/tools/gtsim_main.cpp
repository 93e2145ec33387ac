#include "gtsim/harness.hpp"

int main(int argc, char** argv) { return gtsim::cli_main(argc, argv); }
