#include "vclass/app/commands.hpp"

int main(int argc, char** argv) { return vclass::app::run_cli(argc, argv); }
