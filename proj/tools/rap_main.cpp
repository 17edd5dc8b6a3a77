#include "rap/cli.hpp"

int main(int argc, char** argv) { return rap::run_cli(argc, argv); }
