// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "ttsa/dataio.hpp"
#include "ttsa/error.hpp"

namespace ttsa {
namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

struct WavLayout {
  int sample_rate = 0;
  int format = 0;
  int channels = 0;
  int bits = 0;
  std::streamoff data_offset = 0;
  std::uint32_t data_bytes = 0;
};

WavLayout parse_header(std::ifstream& in, const std::filesystem::path& path) {
  unsigned char riff[12];
  in.read(reinterpret_cast<char*>(riff), 12);
  require(in.gcount() == 12 && std::memcmp(riff, "RIFF", 4) == 0 && std::memcmp(riff + 8, "WAVE", 4) == 0, "wav-format",
          path.string() + ": not a RIFF/WAVE file");
  WavLayout w;
  bool have_fmt = false;
  while (true) {
    unsigned char hdr[8];
    in.read(reinterpret_cast<char*>(hdr), 8);
    require(in.gcount() == 8, "wav-format", path.string() + ": missing data chunk");
    const std::uint32_t size = read_u32(hdr + 4);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      std::vector<unsigned char> fmt(size);
      in.read(reinterpret_cast<char*>(fmt.data()), size);
      require(size >= 16 && in.gcount() == static_cast<std::streamsize>(size), "wav-format", path.string() + ": bad fmt chunk");
      w.format = read_u16(fmt.data());
      w.channels = read_u16(fmt.data() + 2);
      w.sample_rate = static_cast<int>(read_u32(fmt.data() + 4));
      w.bits = read_u16(fmt.data() + 14);
      if (w.format == 0xFFFE && size >= 26) w.format = read_u16(fmt.data() + 24);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      require(have_fmt, "wav-format", path.string() + ": data chunk before fmt chunk");
      w.data_offset = in.tellg();
      w.data_bytes = size;
      break;
    } else {
      in.seekg(size + (size & 1u), std::ios::cur);
    }
    if (size & 1u && std::memcmp(hdr, "fmt ", 4) == 0) in.seekg(1, std::ios::cur);
  }
  require(w.channels == 1, "wav-format", path.string() + ": expected mono audio, got " + std::to_string(w.channels) + " channels");
  require((w.format == 1 && w.bits == 16) || (w.format == 3 && w.bits == 32), "wav-format",
          path.string() + ": only 16-bit PCM and 32-bit float WAV are supported");
  return w;
}

void put_u32(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u16(std::ofstream& out, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

std::size_t wav_num_samples(const std::filesystem::path& path, int* sample_rate) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "io", "cannot open " + path.string());
  const WavLayout w = parse_header(in, path);
  if (sample_rate) *sample_rate = w.sample_rate;
  return w.data_bytes / static_cast<std::uint32_t>(w.bits / 8);
}

Wav read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "io", "cannot open " + path.string());
  const WavLayout w = parse_header(in, path);
  std::vector<unsigned char> raw(w.data_bytes);
  in.read(reinterpret_cast<char*>(raw.data()), w.data_bytes);
  require(in.gcount() == static_cast<std::streamsize>(w.data_bytes), "wav-format", path.string() + ": truncated data");
  Wav out;
  out.sample_rate = w.sample_rate;
  const std::size_t n = w.data_bytes / static_cast<std::uint32_t>(w.bits / 8);
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (w.format == 1) {
      const auto v = static_cast<std::int16_t>(read_u16(raw.data() + 2 * i));
      out.samples[i] = v / 32768.0;
    } else {
      const std::uint32_t bits = read_u32(raw.data() + 4 * i);
      float f;
      std::memcpy(&f, &bits, 4);
      out.samples[i] = f;
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "io", "cannot write " + path.string());
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  put_u32(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.write("data", 4);
  put_u32(out, data_bytes);
  for (double s : samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32767.0))));
  }
  require(out.good(), "io", "failed writing " + path.string());
}

}  // namespace ttsa
