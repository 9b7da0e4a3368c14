#include "mkv/cli.hpp"

int main(int argc, char** argv) { return mkv::run_cli(argc, argv); }
