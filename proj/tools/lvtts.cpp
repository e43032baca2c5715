#include "lvtts/cli/app.hpp"

int main(int argc, char** argv) { return lvtts::cli::run({argv + 1, argv + argc}); }
