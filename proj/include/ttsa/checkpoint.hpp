// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

// Checkpoint container:
//   "TTSACKPT", u32 version, u64 n, n bytes of JSON metadata,
//   u64 count, then per array: u32 name length, name, u32 rank,
//   u64 dims[rank], f64 data (little endian, row major).

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ttsa/tensor.hpp"

namespace ttsa {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  nlohmann::json meta;
  std::vector<std::pair<std::string, Tensor>> arrays;

  const Tensor* find(const std::string& name) const;
  std::map<std::string, const Tensor*> index() const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ttsa
