// Command-line driver; all behavior lives in frontlab/cli.hpp.
#include "frontlab/cli.hpp"

int main(int argc, char** argv) { return frontlab::cli::dispatch(argc, argv); }
