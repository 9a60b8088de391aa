#include "recon/commands.hpp"

int main(int argc, char** argv) { return recon::run_cli(argc, argv); }
