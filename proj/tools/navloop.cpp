// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include <iostream>

#include "navloop/evalcli/cli.hpp"

int main(int argc, char** argv) { return navloop::eval::cli_main(argc, argv, std::cout, std::cerr); }
