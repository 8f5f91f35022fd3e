#include "homeloc_cli.hpp"

int main(int argc, char** argv) { return homeloc::cli::run(argc, argv); }
