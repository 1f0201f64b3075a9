#include <rocof/cli.hpp>

int main(int argc, char** argv) { return rocof::cli::main(argc, argv); }
