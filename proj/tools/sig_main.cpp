#include "sig/cli/cli.hpp"

int main(int argc, char** argv) { return sig::cli::run(argc, argv); }
