#include "egle/cli.hpp"

int main(int argc, char** argv) { return egle::harness::cli_main(argc, argv); }
