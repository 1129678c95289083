#include "harness.hpp"

int main(int argc, char** argv) { return dikp::harness::run_cli(argc, argv); }
