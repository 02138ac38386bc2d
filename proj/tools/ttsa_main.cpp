// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "ttsa/cli.hpp"

int main(int argc, char** argv) { return ttsa::run_cli({argv, argv + argc}, std::cout, std::cerr); }
