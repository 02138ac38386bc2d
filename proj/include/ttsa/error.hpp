// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ttsa {

// Every failure carries a short machine-parseable category ("shape-mismatch",
// "config-not-found", ...) next to the human message. The CLI prints both on
// one line.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

[[noreturn]] inline void fail(const std::string& category, const std::string& message) {
  throw Error(category, message);
}

inline void require(bool ok, const char* category, const std::string& message) {
  if (!ok) throw Error(category, message);
}

}  // namespace ttsa
