// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

// Objective evaluation: speaker similarity (SECS), phoneme substitution rate
// (PSR), PSR ranking checks against MUSHRA results, and a bridge to external
// quality scorers.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "ttsa/dataio.hpp"
#include "ttsa/recognizer.hpp"

namespace ttsa {

class TtsModel;

// ---- speaker similarity --------------------------------------------------

class SpeakerEmbedder {
 public:
  virtual ~SpeakerEmbedder() = default;
  // Unit L2 norm, fixed dimension.
  virtual std::vector<double> embed(std::span<const double> waveform) const = 0;
};

// Mean and standard deviation of every log-mel band, optionally centered on
// a corpus mean learned by fit(), then normalized.
class MelStatsEmbedder : public SpeakerEmbedder {
 public:
  explicit MelStatsEmbedder(const AudioConfig& audio = {});
  std::vector<double> embed(std::span<const double> waveform) const override;
  void fit(std::span<const std::vector<double>> waveforms);
  int dim() const { return 2 * audio_.mel_bins; }

 private:
  std::vector<double> raw(std::span<const double> waveform) const;

  AudioConfig audio_;
  std::vector<double> center_;
};

double cosine_similarity(std::span<const double> a, std::span<const double> b);
// Cosine of the two embeddings, in [-1, 1].
double secs(std::span<const double> reference, std::span<const double> synthesized, const SpeakerEmbedder& embedder);

// ---- alignment and PSR ---------------------------------------------------

struct AlignedPair {
  int ref = -1;  // -1: insertion
  int hyp = -1;  // -1: deletion
};

struct AlignmentResult {
  int matches = 0;
  int substitutions = 0;
  int insertions = 0;
  int deletions = 0;
  std::vector<AlignedPair> pairs;

  int distance() const { return substitutions + insertions + deletions; }
};

// Unit-cost Levenshtein alignment. Backtrace prefers match, then
// substitution, then deletion, then insertion.
AlignmentResult align(std::span<const std::string> reference, std::span<const std::string> hypothesis);
AlignmentResult align(std::span<const int> reference, std::span<const int> hypothesis);

// 100 * substitutions / |reference|.
double psr(std::span<const std::string> reference, std::span<const std::string> hypothesis);
double psr(std::span<const int> reference, std::span<const int> hypothesis);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
  int count = 0;
};

MeanStd mean_std(std::span<const double> values);

struct PsrRow {
  std::string id;
  double psr = 0.0;
  double insertion_rate = 0.0;  // percent of reference length
  double deletion_rate = 0.0;
  std::vector<std::string> hypothesis;
};

struct PsrSummary {
  std::vector<PsrRow> rows;
  MeanStd psr;
  MeanStd insertion_rate;
  MeanStd deletion_rate;
};

PsrRow psr_row(const LabeledAudio& utterance, const std::vector<std::string>& hypothesis);
PsrSummary psr_corpus(std::span<const LabeledAudio> utterances, const PhonemeRecognizer& recognizer);

// ---- MUSHRA ranking check ------------------------------------------------

struct MushraPair {
  std::string system_a, system_b;
  double mushra_a = 0.0, mushra_b = 0.0;
  std::vector<LabeledAudio> audio_a, audio_b;
};

struct MushraPairOutcome {
  std::string system_a, system_b;
  double psr_a = 0.0, psr_b = 0.0;
  bool success = false;
};

struct MushraValidation {
  double accuracy = 0.0;
  int evaluated = 0;
  int successes = 0;
  std::vector<MushraPairOutcome> outcomes;
  std::vector<std::string> skipped;  // "a|b" for MUSHRA ties
};

// A pair succeeds when the system with the higher MUSHRA mean has strictly
// lower mean PSR.
MushraValidation validate_against_mushra(std::span<const MushraPair> pairs, const PhonemeRecognizer& recognizer);

// Tab-separated, one pair per line after a header:
//   system_a  system_b  mushra_a  mushra_b  manifest_a  manifest_b
// Each manifest lists a system's audio with the reference phonemes; relative
// paths resolve against the pairs file. '#' starts a comment line.
std::vector<MushraPair> load_mushra_pairs(const std::filesystem::path& path);

// ---- external scorers ----------------------------------------------------

// Runs `command <reference.wav> <synthesized.wav>` through the shell and
// reads "name value" lines from its standard output. A missing command, a
// nonzero exit or unparsable output yields evaluated == false.
struct ExternalScore {
  bool evaluated = false;
  std::map<std::string, double> values;
  std::string note;
};

struct ExternalScorer {
  std::string name;
  std::string command;

  ExternalScore score(const std::filesystem::path& reference, const std::filesystem::path& synthesized) const;
};

// ---- checkpoint evaluation -----------------------------------------------

inline constexpr int kEvalReportVersion = 1;

struct EvaluateOptions {
  std::vector<std::string> metrics = {"secs", "psr"};
  const PhonemeRecognizer* recognizer = nullptr;  // required for psr
  const SpeakerEmbedder* embedder = nullptr;      // default: MelStatsEmbedder fitted on the references
  std::vector<ExternalScorer> scorers;
  std::filesystem::path audio_dir;  // synthesized wavs are kept here when set
};

// Synthesizes every manifest entry and scores it against its reference.
nlohmann::json evaluate(TtsModel& model, const Manifest& manifest, const EvaluateOptions& options);

}  // namespace ttsa
