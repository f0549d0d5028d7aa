#include "ddc/cli.hpp"

int main(int argc, char** argv) { return ddc::cli::run(argc, argv); }
