#include "setmatch/cli.hpp"

int main(int argc, char** argv) { return setmatch::cli::run(argc, argv); }
