#include "amerlsm/cli.hpp"

int main(int argc, char** argv) { return amerlsm::cli::run(argc, argv); }
