#include "cps_cli.hpp"

int main(int argc, char** argv) { return cps::cli::run(argc, argv); }
