#include "mvlift/cli.hpp"

int main(int argc, char** argv) { return mvlift::cli_main(argc, argv); }
