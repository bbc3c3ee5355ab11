#include "cli/app.hpp"

int main(int argc, char** argv) { return cbjj::cli::run_cli(argc, argv); }
