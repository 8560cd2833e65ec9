#include "conformal_kit/cli.hpp"

int main(int argc, char** argv) { return conformal::cli_main(argc, argv); }
