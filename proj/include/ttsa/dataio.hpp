// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

// Dataset manifests, audio features and training examples.
//
// Manifest format: UTF-8 text, one record per line, six tab-separated fields
//
//   audio_path  phonemes  durations  f0  speaker_id  language_id
//
// phonemes are space-separated symbols, durations are comma-separated frame
// counts (one per phoneme), f0 is comma-separated Hz per frame with 0 marking
// unvoiced frames. Relative audio paths resolve against the manifest's
// directory. Blank lines and lines starting with '#' are ignored, except the
// directives
//
//   #!speakers   id,id,...
//   #!languages  id,id,...
//
// which declare closed id vocabularies that every entry must draw from.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ttsa/autograd.hpp"
#include "ttsa/tensor.hpp"

namespace ttsa {

struct AudioConfig {
  int sample_rate = 16000;
  int hop_length = 256;
  int win_length = 1024;
  int n_fft = 1024;
  int mel_bins = 80;
  double fmin = 0.0;
  double fmax = 8000.0;

  // Returns one message per violated field.
  std::vector<std::string> violations() const;
  void validate() const;
};

struct ManifestEntry {
  std::string audio_path;  // resolved
  std::vector<std::string> phonemes;
  std::vector<int> durations;
  std::vector<double> f0;
  std::string speaker_id;
  std::string language_id;
  int line = 0;

  int total_frames() const;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> speakers;   // declared, or first-seen order
  std::vector<std::string> languages;  // declared, or first-seen order
  std::vector<std::string> phonemes;   // first-seen order
};

// Parses and validates eagerly. Audio headers are read to check that the
// duration and f0 lengths match the spectrogram frame count (within one frame).
Manifest load_manifest(const std::filesystem::path& path, const AudioConfig& audio = {});
// Parses text already in memory; audio files are not consulted.
Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

// ---- pitch ---------------------------------------------------------------

inline constexpr int kPitchBins = 256;
inline constexpr int kUnvoicedBin = 0;
inline constexpr double kPitchClipSigma = 3.0;

struct PitchStats {
  double mean = 0.0;
  double std = 1.0;
};

// Statistics over voiced (f0 > 0) frames.
PitchStats pitch_stats(std::span<const double> f0);
std::vector<int> quantize_pitch(std::span<const double> f0, const PitchStats& stats);
// Center of a voiced bin in standardized (z) units.
double pitch_bin_center(int bin);
double pitch_bin_width();

// ---- spectrogram ---------------------------------------------------------

// Log-magnitude mel spectrogram, [frames, mel_bins], frames = ceil(len / hop).
Tensor compute_mel(std::span<const double> waveform, const AudioConfig& config);
// Differentiable form used by the losses: [mel_bins, frames].
ag::Var log_mel(const ag::Var& waveform, const AudioConfig& config);
inline constexpr double kMelFloor = 1e-5;

// ---- vocabularies and examples -------------------------------------------

struct Vocabulary {
  std::vector<std::string> phonemes;
  std::vector<std::string> speakers;
  std::vector<std::string> languages;

  std::optional<int> phoneme_id(const std::string& s) const;
  std::optional<int> speaker_id(const std::string& s) const;
  std::optional<int> language_id(const std::string& s) const;
  std::vector<int> encode_phonemes(std::span<const std::string> symbols) const;  // throws on unknown
};

struct Utterance {
  std::string id;
  std::vector<int> phoneme_ids;
  std::vector<int> durations;   // frames per phoneme
  std::vector<int> pitch_bins;  // per frame, [0, 255]
  std::vector<double> waveform; // frames * hop samples
  Tensor mel;                   // [frames, mel_bins]; empty unless requested
  int speaker_id = 0;
  int language_id = 0;

  int frames() const;
};

// Reads audio, reconciles off-by-one frame counts (truncating to the shorter
// of durations and audio), and quantizes pitch with per-speaker statistics.
std::vector<Utterance> build_utterances(const Manifest& manifest, const Vocabulary& vocab, const AudioConfig& audio,
                                        bool with_mel = false);

// ---- caches --------------------------------------------------------------
//
// Flat binary arrays: magic "TTSAARR1", u32 dtype (1 = f64, 2 = i32), u32 rank,
// u64 dims[rank], then little-endian row-major data.

void save_array(const std::filesystem::path& path, const Tensor& t);
void save_int_array(const std::filesystem::path& path, std::span<const int> values);
Tensor load_array(const std::filesystem::path& path);
std::vector<int> load_int_array(const std::filesystem::path& path);

// ---- WAV -----------------------------------------------------------------

struct Wav {
  int sample_rate = 0;
  std::vector<double> samples;  // mono, [-1, 1]
};

Wav read_wav(const std::filesystem::path& path);
// Number of samples from the header without decoding data.
std::size_t wav_num_samples(const std::filesystem::path& path, int* sample_rate = nullptr);
// 16-bit PCM mono; samples are clipped to [-1, 1].
void write_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate);

}  // namespace ttsa
