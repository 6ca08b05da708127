#include "gpool/cli.hpp"

int main(int argc, char** argv) { return gpool::dispatch(argc, argv); }
