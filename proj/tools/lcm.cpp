#include "lcm/cli.hpp"

int main(int argc, char** argv) { return lcm::cli::run(argc, argv); }
