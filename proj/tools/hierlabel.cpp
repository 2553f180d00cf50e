// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "hierlabel/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return hierlabel::run_cli(args, std::cout, std::cerr);
}
