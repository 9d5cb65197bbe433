#include "cli/commands.hpp"

int main(int argc, char** argv) { return shallownet::cli::run(argc, argv); }
