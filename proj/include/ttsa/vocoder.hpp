// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

// Multi-band MelGAN-style generator. Each stage is a transposed-conv
// upsampler followed by dilated residual blocks; the last conv emits
// sub-band signals that a PQMF bank merges into the full-band waveform.

#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ttsa/adapter_blocks.hpp"
#include "ttsa/dsp.hpp"
#include "ttsa/nn.hpp"

namespace ttsa {

struct VocoderConfig {
  int in_channels = 256;
  int pre_channels = 256;
  int pre_kernel = 7;
  std::vector<int> upsample_factors = {4, 4, 4};
  std::vector<int> stage_channels = {32, 16, 8};
  int residual_blocks_per_stage = 4;
  std::vector<int> dilations = {1, 3, 9, 27};  // one per residual block
  int post_kernel = 7;
  int sub_bands = 4;
  double leaky_slope = 0.2;

  int upsample_product() const;
  // Violations given the frame hop the vocoder must realize.
  std::vector<std::string> violations(int hop_length) const;
};

class Upsample : public Module, public AdapterHost {
 public:
  Upsample(int in, int out, int factor, Rng& rng);
  ag::Var forward(Tape& tape, const ag::Var& x);
  void visit(const std::string& prefix, const ParameterVisitor& fn) override;
  int output_channels() const override { return channels_; }
  AdapterSlot& slot() override { return slot_; }

  ConvTranspose1d conv;

 private:
  int channels_;
  AdapterSlot slot_;
};

// x + conv1x1(lrelu(conv_dilated(lrelu(x)))), then the optional adapter.
class ResBlock : public Module, public AdapterHost {
 public:
  ResBlock(int channels, int dilation, double slope, Rng& rng);
  ag::Var forward(Tape& tape, const ag::Var& x);
  void visit(const std::string& prefix, const ParameterVisitor& fn) override;
  int output_channels() const override { return channels_; }
  AdapterSlot& slot() override { return slot_; }

  Conv1d dilated;
  Conv1d pointwise;

 private:
  int channels_;
  double slope_;
  AdapterSlot slot_;
};

struct VocoderStage {
  std::unique_ptr<Upsample> upsample;
  std::vector<std::unique_ptr<ResBlock>> resblocks;
};

class Vocoder : public Module {
 public:
  Vocoder(const VocoderConfig& config, int hop_length, Rng& rng);

  const VocoderConfig& config() const { return config_; }
  int hop_length() const { return hop_length_; }

  // latents: [in_channels, frames] -> waveform [1, frames * hop_length]
  ag::Var forward(Tape& tape, const ag::Var& latents);
  void visit(const std::string& prefix, const ParameterVisitor& fn) override;
  // "stages.{s}.upsample" and "stages.{s}.resblocks.{r}" relative to this module.
  std::map<std::string, AdapterHost*> attachment_points();

  Conv1d pre;
  std::vector<VocoderStage> stages;
  Conv1d post;

 private:
  VocoderConfig config_;
  int hop_length_;
  std::unique_ptr<dsp::Pqmf> pqmf_;
};

}  // namespace ttsa
