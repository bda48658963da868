#include "cocontact/cli/cli.hpp"

int main(int argc, char** argv) { return cocontact::cli::run(argc, argv); }
