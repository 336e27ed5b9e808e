#include <dlgp/cli.hpp>

int main(int argc, char** argv) { return dlgp::cli::run(argc, argv); }
