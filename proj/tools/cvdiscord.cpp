#include "cli_app.hpp"

int main(int argc, char **argv) { return cvdiscord::cli::run(argc, argv); }
