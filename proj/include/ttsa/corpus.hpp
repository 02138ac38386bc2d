// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

// Procedural speech-like corpus used for fixtures and smoke training when no
// recorded corpus is available. Each phone is rendered from a formant
// envelope (voiced) or a resonant noise band (unvoiced) with exact
// frame-aligned durations and a known f0 track.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ttsa/dataio.hpp"

namespace ttsa::corpus {

struct PhoneSpec {
  std::string symbol;
  bool voiced = true;
  double formants[3] = {500.0, 1500.0, 2500.0};
  double noise_center = 0.0;  // unvoiced only
  double noise_bandwidth = 0.0;
};

const std::vector<PhoneSpec>& phone_inventory();
const PhoneSpec& phone(const std::string& symbol);

// Deterministic 16-phone subset per language id; different ids overlap
// partially.
std::vector<std::string> language_phones(const std::string& language);

struct SpeakerVoice {
  double base_f0 = 120.0;
  double formant_scale = 1.0;
  double tilt = 1.0;
};

SpeakerVoice speaker_voice(const std::string& speaker_id);

struct Rendered {
  std::vector<double> waveform;  // sum(durations) * hop samples
  std::vector<double> f0;        // per frame, 0 when unvoiced
};

Rendered render(std::span<const std::string> phones, std::span<const int> durations, const SpeakerVoice& voice,
                const AudioConfig& audio, std::uint64_t seed);

struct CorpusSpec {
  std::string language = "L1";
  std::vector<std::string> speakers = {"S1"};
  int utterances_per_speaker = 16;
  int min_phones = 4;
  int max_phones = 9;
  int min_duration = 3;
  int max_duration = 9;
  int min_frames = 24;
  std::uint64_t seed = 1;
  std::string prefix = "utt";
  AudioConfig audio;
};

// Writes <dir>/wavs/*.wav and <dir>/manifest.tsv; returns the manifest path.
std::filesystem::path generate(const std::filesystem::path& dir, const CorpusSpec& spec);

std::uint64_t fnv1a(const std::string& s);

}  // namespace ttsa::corpus
