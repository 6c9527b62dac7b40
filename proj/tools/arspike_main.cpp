#include "arspike/cli.hpp"

int main(int argc, char** argv) { return arspike::run_cli(argc, argv); }
