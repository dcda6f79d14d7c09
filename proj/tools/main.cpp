#include "cli.hpp"

int main(int argc, char** argv) { return pulseline::cli::run(argc, argv); }
