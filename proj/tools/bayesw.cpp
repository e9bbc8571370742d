#include "bayesw/cli.hpp"

int main(int argc, char** argv) { return bayesw::run_cli(argc, argv); }
