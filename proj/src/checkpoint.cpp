// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include "ttsa/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "ttsa/error.hpp"

namespace ttsa {

namespace {

constexpr char kMagic[8] = {'T', 'T', 'S', 'A', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(in.gcount() == sizeof(T), "checkpoint-format", path.string() + ": truncated checkpoint");
  return v;
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : arrays)
    if (n == name) return &t;
  return nullptr;
}

std::map<std::string, const Tensor*> Checkpoint::index() const {
  std::map<std::string, const Tensor*> m;
  for (const auto& [n, t] : arrays) m[n] = &t;
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), "io", "cannot write " + tmp.string());
    out.write(kMagic, 8);
    put<std::uint32_t>(out, kCheckpointVersion);
    const std::string meta = ckpt.meta.dump();
    put<std::uint64_t>(out, meta.size());
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    put<std::uint64_t>(out, ckpt.arrays.size());
    for (const auto& [name, t] : ckpt.arrays) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
      for (int d : t.shape()) put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
      out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(double)));
    }
    require(out.good(), "io", "failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "checkpoint-not-found", "cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, 8);
  require(in.gcount() == 8 && std::memcmp(magic, kMagic, 8) == 0, "checkpoint-format", path.string() + ": bad magic");
  const auto version = get<std::uint32_t>(in, path);
  require(version == kCheckpointVersion, "checkpoint-format",
          path.string() + ": unsupported version " + std::to_string(version));
  Checkpoint c;
  const auto meta_len = get<std::uint64_t>(in, path);
  std::string meta(meta_len, '\0');
  in.read(meta.data(), static_cast<std::streamsize>(meta_len));
  require(static_cast<std::uint64_t>(in.gcount()) == meta_len, "checkpoint-format", path.string() + ": truncated metadata");
  try {
    c.meta = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    fail("checkpoint-format", path.string() + ": bad metadata: " + e.what());
  }
  const auto count = get<std::uint64_t>(in, path);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rank = get<std::uint32_t>(in, path);
    require(rank <= 8, "checkpoint-format", path.string() + ": implausible rank for " + name);
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(static_cast<int>(get<std::uint64_t>(in, path)));
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(double)));
    require(static_cast<std::size_t>(in.gcount()) == t.numel() * sizeof(double), "checkpoint-format",
            path.string() + ": truncated array " + name);
    c.arrays.emplace_back(std::move(name), std::move(t));
  }
  return c;
}

}  // namespace ttsa
