#include "maxel/cli.hpp"

int main(int argc, char** argv) { return maxel::cli::run(argc, argv); }
