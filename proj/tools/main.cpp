#include "cli.hpp"

int main(int argc, char** argv) { return dnni::cli::main(argc, argv); }
