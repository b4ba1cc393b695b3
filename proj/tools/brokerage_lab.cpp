#include "brokerage/config.hpp"

int main(int argc, char** argv) { return brokerage::cli_main(argc, argv); }
