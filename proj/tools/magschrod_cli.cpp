#include "magschrod/runner.hpp"

int main(int argc, char** argv) { return msw::cli::run_command(argc, argv); }
