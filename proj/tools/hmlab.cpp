#include <hmlab/cli.hpp>

int main(int argc, char** argv) { return hmlab::cli::run(argc, argv); }
