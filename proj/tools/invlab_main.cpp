#include "invlab/cli.hpp"

int main(int argc, char** argv) { return invlab::run_cli(argc, argv); }
