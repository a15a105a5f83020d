#include "tabinfill/cli.hpp"

int main(int argc, char** argv) { return tabinfill::cli::run(argc, argv); }
