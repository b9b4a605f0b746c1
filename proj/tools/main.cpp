#include "cli.hpp"

int main(int argc, char** argv) { return ssnsm::cli::main_entry(argc, argv); }
