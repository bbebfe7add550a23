#include "shrinkeq/cli.hpp"

int main(int argc, char** argv) { return shrinkeq::run_cli(argc, argv); }
