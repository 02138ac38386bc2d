// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

// Phoneme recognition with CTC. Posteriors are [frames, P + 1]
// log-probabilities; the blank symbol is the last column.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ttsa/dataio.hpp"
#include "ttsa/nn.hpp"
#include "ttsa/optimizer.hpp"

namespace ttsa {

class PhonemeRecognizer {
 public:
  virtual ~PhonemeRecognizer() = default;
  virtual Tensor posteriors(std::span<const double> waveform) const = 0;
  // Symbol for column i < P.
  virtual const std::vector<std::string>& symbols() const = 0;
  int blank() const { return static_cast<int>(symbols().size()); }
};

// Greedy best path: per-frame argmax, collapse repeats, drop blanks.
std::vector<int> ctc_decode(const Tensor& posteriors, int blank);
std::vector<std::string> ctc_decode(const Tensor& posteriors, const PhonemeRecognizer& recognizer);
std::vector<std::string> transcribe(const PhonemeRecognizer& recognizer, std::span<const double> waveform);

// -log p(labels | posteriors) for [frames, K] log-probabilities.
double ctc_loss_value(const Tensor& posteriors, std::span<const int> labels, int blank);

struct LabeledAudio {
  std::string id;
  std::vector<double> waveform;
  std::vector<std::string> phonemes;
};

// Reads waveforms and reference phonemes from a manifest.
std::vector<LabeledAudio> labeled_audio(const Manifest& manifest);

struct ConvRecognizerConfig {
  int hidden = 96;
  std::vector<int> kernels = {5, 5, 3};
  AudioConfig audio;
};

// Log-mel front end, a stack of same-padded convolutions with layer norm and
// a pointwise classification head.
class ConvRecognizer : public PhonemeRecognizer, public Module {
 public:
  ConvRecognizer(std::vector<std::string> symbols, const ConvRecognizerConfig& config, std::uint64_t seed);

  Tensor posteriors(std::span<const double> waveform) const override;
  const std::vector<std::string>& symbols() const override { return symbols_; }
  // Log-probabilities [P + 1, frames] on a tape.
  ag::Var forward(Tape& tape, std::span<const double> waveform);
  void visit(const std::string& prefix, const ParameterVisitor& fn) override;
  const ConvRecognizerConfig& config() const { return config_; }
  std::vector<int> encode(std::span<const std::string> phonemes) const;

 private:
  ag::Var features(std::span<const double> waveform) const;

  std::vector<std::string> symbols_;
  ConvRecognizerConfig config_;
  std::vector<Conv1d> convs_;
  std::vector<LayerNorm> norms_;
  Conv1d head_;
};

struct CtcTrainOptions {
  int epochs = 30;
  double lr = 2e-3;
  std::uint64_t seed = 1;
  OptimizerConfig optimizer;
};

// Returns the mean CTC loss of every epoch. An utterance whose label cannot
// fit its frames raises ctc-infeasible naming the utterance.
std::vector<double> ctc_train(ConvRecognizer& recognizer, std::span<const LabeledAudio> corpus,
                              const CtcTrainOptions& options);

// Mean CTC loss over a corpus without updating.
double ctc_corpus_loss(ConvRecognizer& recognizer, std::span<const LabeledAudio> corpus);

void save_recognizer(const std::filesystem::path& path, ConvRecognizer& recognizer);
ConvRecognizer load_recognizer(const std::filesystem::path& path);

}  // namespace ttsa
