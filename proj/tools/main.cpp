#include "hmggc/cli.hpp"

int main(int argc, char** argv) { return hmggc::cli::run(argc, argv); }
