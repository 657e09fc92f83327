#include "koopsym/cli.hpp"

int main(int argc, char** argv) { return koopsym::cli::main(argc, argv); }
