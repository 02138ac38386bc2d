// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ttsa {

// Runs one command line; args[0] is the program name. Failures print a
// single "error[<category>]: <message>" line on `err` and return nonzero.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "<root>/<UTC timestamp>-seed<seed>", made unique with a numeric suffix.
std::filesystem::path make_run_dir(const std::filesystem::path& root, std::uint64_t seed);

}  // namespace ttsa
