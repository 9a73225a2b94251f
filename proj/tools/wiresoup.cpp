#include "wiresoup/cli.hpp"

int main(int argc, char** argv) { return wiresoup::cli::main_entry(argc, argv); }
