// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

// Multi-period and multi-resolution discriminators.

#pragma once

#include <string>
#include <vector>

#include "ttsa/dsp.hpp"
#include "ttsa/nn.hpp"

namespace ttsa {

struct DiscriminatorConfig {
  std::vector<int> mpd_periods = {2, 3, 5, 7, 11};
  std::vector<int> mpd_channels = {16, 32, 64, 128};  // strided layers; a stride-1 layer repeats the last width
  std::vector<dsp::StftParams> mrd_resolutions = {{1024, 120, 600}, {2048, 240, 1200}, {512, 50, 240}};
  int mrd_channels = 16;
  int mrd_layers = 4;
  double leaky_slope = 0.1;

  std::vector<std::string> violations() const;
  // Shortest waveform every discriminator accepts.
  int min_length() const;
};

struct DiscriminatorOutput {
  ag::Var scores;
  std::vector<ag::Var> features;  // shallow to deep
};

class PeriodDiscriminator : public Module {
 public:
  PeriodDiscriminator(int period, const std::vector<int>& channels, double slope, Rng& rng);
  // x: [1, T], right zero-padded to a [1, ceil(T / p), p] grid.
  DiscriminatorOutput forward(Tape& tape, const ag::Var& x);
  void visit(const std::string& prefix, const ParameterVisitor& fn) override;
  int period() const { return period_; }

  std::vector<Conv2d> layers;
  Conv2d post;

 private:
  int period_;
  double slope_;
};

// Reshapes [1, T] into [1, ceil(T / p), p] with right zero padding.
ag::Var period_grid(const ag::Var& x, int period);

class ResolutionDiscriminator : public Module {
 public:
  ResolutionDiscriminator(const dsp::StftParams& stft, int channels, int n_layers, double slope, Rng& rng);
  // Operates on the magnitude spectrogram [1, bins, frames].
  DiscriminatorOutput forward(Tape& tape, const ag::Var& x);
  void visit(const std::string& prefix, const ParameterVisitor& fn) override;

  std::vector<Conv2d> layers;
  Conv2d post;

 private:
  dsp::StftParams stft_;
  double slope_;
};

class DiscriminatorSet : public Module {
 public:
  DiscriminatorSet(const DiscriminatorConfig& config, Rng& rng);

  const DiscriminatorConfig& config() const { return config_; }
  // One output per period, then one per resolution.
  std::vector<DiscriminatorOutput> forward(Tape& tape, const ag::Var& waveform);
  void visit(const std::string& prefix, const ParameterVisitor& fn) override;

  std::vector<PeriodDiscriminator> mpd;
  std::vector<ResolutionDiscriminator> mrd;

 private:
  DiscriminatorConfig config_;
};

}  // namespace ttsa
