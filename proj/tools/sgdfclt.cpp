#include "sgdfclt/cli.hpp"

int main(int argc, char** argv) { return sgdfclt::run_cli(argc, argv); }
