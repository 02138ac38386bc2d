// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

// Non-autoregressive acoustic model: separable-conv text encoder, duration and
// pitch predictors with a length regulator, and a separable-conv decoder that
// emits frame-rate latents for the vocoder.

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "ttsa/adapter_blocks.hpp"
#include "ttsa/nn.hpp"

namespace ttsa {

struct AcousticConfig {
  int phoneme_vocab_size = 64;
  int embed_dim = 256;
  int hidden_dim = 256;
  std::vector<int> encoder_kernels = {5, 25, 13, 9};  // one entry per layer
  std::vector<int> decoder_kernels = {17, 21, 9};
  int convs_per_layer = 2;
  int predictor_convs = 2;
  int predictor_kernel = 3;
  int n_speakers = 1;
  int n_languages = 1;
  int pitch_bins = 256;

  int encoder_layers() const { return static_cast<int>(encoder_kernels.size()); }
  int decoder_layers() const { return static_cast<int>(decoder_kernels.size()); }
  // Separable convolutions across encoder, decoder and both predictors.
  int conv_layer_count() const;
  std::vector<std::string> violations() const;
};

// Depthwise conv -> pointwise conv -> ReLU -> LayerNorm, followed by an
// optional adapter.
class SepConv : public Module, public AdapterHost {
 public:
  SepConv() = default;
  SepConv(int channels, int kernel, Rng& rng);

  ag::Var forward(Tape& tape, const ag::Var& x);
  void visit(const std::string& prefix, const ParameterVisitor& fn) override;
  int output_channels() const override { return channels_; }
  AdapterSlot& slot() override { return slot_; }

  Conv1d depthwise;
  Conv1d pointwise;
  LayerNorm norm;

 private:
  int channels_ = 0;
  AdapterSlot slot_;
};

// Residual stack: x + convs(x).
class ConvBlock : public Module {
 public:
  ConvBlock(int channels, int kernel, int convs, Rng& rng);
  ag::Var forward(Tape& tape, const ag::Var& x);
  void visit(const std::string& prefix, const ParameterVisitor& fn) override;

  std::vector<SepConv> convs;
};

// Convs followed by a per-position linear head: [C, N] -> [out, N].
class Predictor : public Module {
 public:
  Predictor() = default;
  Predictor(int channels, int kernel, int convs, int out_dim, Rng& rng);
  ag::Var forward(Tape& tape, const ag::Var& x);
  void visit(const std::string& prefix, const ParameterVisitor& fn) override;

  std::vector<SepConv> convs;
  Parameter head_weight;  // [out, C]
  Parameter head_bias;    // [out]
};

struct ConditioningTables : public Module {
  Embedding phoneme_embedding;
  Embedding speaker_table;
  Embedding language_table;

  void visit(const std::string& prefix, const ParameterVisitor& fn) override;
};

struct AcousticOutput {
  ag::Var latents;              // [hidden, frames]
  ag::Var log_durations;        // [1, phonemes]
  ag::Var pitch_logits;         // [pitch_bins, frames]
  std::vector<int> durations;   // frames per phoneme actually used
  std::vector<int> pitch_bins;  // bins fed to the pitch embedding
  int frames() const;
};

// Inference rounding: round-half-up of exp(log_duration), at least 1 frame.
int round_duration(double log_duration);

// Repeats column i of h: [C, N] durations[i] times.
ag::Var length_regulate(const ag::Var& h, std::span<const int> durations);

// Sinusoidal position encodings, [dim, length].
Tensor sinusoidal_positions(int dim, int length);

class AcousticModel : public Module {
 public:
  AcousticModel(const AcousticConfig& config, Rng& rng);

  const AcousticConfig& config() const { return config_; }

  ag::Var encode(Tape& tape, std::span<const int> phoneme_ids, int speaker_id, int language_id,
                 ConditioningTables& tables);
  ag::Var predict_duration(Tape& tape, const ag::Var& hidden);   // [1, N]
  ag::Var predict_pitch(Tape& tape, const ag::Var& frame_hidden);  // [pitch_bins, F]
  ag::Var add_pitch(Tape& tape, const ag::Var& frame_hidden, std::span<const int> bins);
  ag::Var decode(Tape& tape, const ag::Var& frame_hidden);

  // Teacher-forced: target durations and pitch bins drive the regulator and
  // the pitch embedding.
  AcousticOutput forward_teacher(Tape& tape, std::span<const int> phoneme_ids, int speaker_id, int language_id,
                                 std::span<const int> durations, std::span<const int> pitch_bins,
                                 ConditioningTables& tables);
  // Inference: rounded predicted durations, argmax pitch bins.
  AcousticOutput infer(Tape& tape, std::span<const int> phoneme_ids, int speaker_id, int language_id,
                       ConditioningTables& tables);

  void visit(const std::string& prefix, const ParameterVisitor& fn) override;
  // "encoder.layers.{l}.convs.{j}" style paths relative to this module.
  std::map<std::string, AdapterHost*> attachment_points();

  ConditioningTables tables;
  std::vector<ConvBlock> encoder;
  Predictor duration_predictor;
  Predictor pitch_predictor;
  Embedding pitch_embedding;
  std::vector<ConvBlock> decoder;

 private:
  AcousticConfig config_;
};

}  // namespace ttsa
