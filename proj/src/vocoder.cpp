// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include "ttsa/vocoder.hpp"

#include "ttsa/error.hpp"

namespace ttsa {

int VocoderConfig::upsample_product() const {
  int p = 1;
  for (int f : upsample_factors) p *= f;
  return p;
}

std::vector<std::string> VocoderConfig::violations(int hop_length) const {
  std::vector<std::string> v;
  if (in_channels < 1 || pre_channels < 1) v.push_back("vocoder channel counts must be >= 1");
  if (upsample_factors.size() != 3) v.push_back("vocoder.upsample_factors must list exactly 3 stages");
  if (stage_channels.size() != upsample_factors.size())
    v.push_back("vocoder.stage_channels must have one entry per upsampling stage");
  for (int f : upsample_factors)
    if (f < 2 || f % 2 != 0) v.push_back("vocoder.upsample_factors entries must be even and >= 2");
  for (int c : stage_channels)
    if (c < 1) v.push_back("vocoder.stage_channels entries must be >= 1");
  if (residual_blocks_per_stage != 4) v.push_back("vocoder.residual_blocks_per_stage must be 4");
  if (static_cast<int>(dilations.size()) != residual_blocks_per_stage)
    v.push_back("vocoder.dilations must have one entry per residual block");
  if (sub_bands < 1) v.push_back("vocoder.sub_bands must be >= 1");
  if (pre_kernel % 2 == 0 || post_kernel % 2 == 0) v.push_back("vocoder pre/post kernels must be odd");
  if (upsample_product() * sub_bands != hop_length)
    v.push_back("vocoder: product(upsample_factors) * sub_bands must equal audio.hop_length (" +
                std::to_string(upsample_product() * sub_bands) + " != " + std::to_string(hop_length) + ")");
  return v;
}

Upsample::Upsample(int in, int out, int factor, Rng& rng) : conv(in, out, 2 * factor, factor, factor / 2, rng), channels_(out) {}

ag::Var Upsample::forward(Tape& tape, const ag::Var& x) { return slot_.apply(tape, conv.forward(tape, x)); }

void Upsample::visit(const std::string& prefix, const ParameterVisitor& fn) {
  conv.visit(join_path(prefix, "conv"), fn);
  slot_.visit(prefix, fn);
}

ResBlock::ResBlock(int channels, int dilation, double slope, Rng& rng)
    : dilated(channels, channels, 3, rng, dilation), pointwise(channels, channels, 1, rng), channels_(channels), slope_(slope) {}

ag::Var ResBlock::forward(Tape& tape, const ag::Var& x) {
  ag::Var y = dilated.forward(tape, ag::leaky_relu(x, slope_));
  y = pointwise.forward(tape, ag::leaky_relu(y, slope_));
  return slot_.apply(tape, ag::add(x, y));
}

void ResBlock::visit(const std::string& prefix, const ParameterVisitor& fn) {
  dilated.visit(join_path(prefix, "dilated"), fn);
  pointwise.visit(join_path(prefix, "pointwise"), fn);
  slot_.visit(prefix, fn);
}

Vocoder::Vocoder(const VocoderConfig& config, int hop_length, Rng& rng) : config_(config), hop_length_(hop_length) {
  const auto v = config.violations(hop_length);
  if (!v.empty()) {
    std::string msg;
    for (const auto& s : v) msg += (msg.empty() ? "" : "; ") + s;
    fail("config-invalid", msg);
  }
  pre = Conv1d(config.in_channels, config.pre_channels, config.pre_kernel, rng);
  int in = config.pre_channels;
  for (std::size_t s = 0; s < config.upsample_factors.size(); ++s) {
    VocoderStage stage;
    const int c = config.stage_channels[s];
    stage.upsample = std::make_unique<Upsample>(in, c, config.upsample_factors[s], rng);
    for (int r = 0; r < config.residual_blocks_per_stage; ++r)
      stage.resblocks.push_back(
          std::make_unique<ResBlock>(c, config.dilations[static_cast<std::size_t>(r)], config.leaky_slope, rng));
    stages.push_back(std::move(stage));
    in = c;
  }
  post = Conv1d(in, config.sub_bands, config.post_kernel, rng);
  if (config.sub_bands > 1) pqmf_ = std::make_unique<dsp::Pqmf>(config.sub_bands);
}

ag::Var Vocoder::forward(Tape& tape, const ag::Var& latents) {
  require(latents.value().rank() == 2 && latents.dim(0) == config_.in_channels && latents.dim(1) > 0, "shape-mismatch",
          "vocoder expects non-empty [" + std::to_string(config_.in_channels) + ", frames], got " +
              shape_str(latents.shape()));
  ag::Var x = pre.forward(tape, latents);
  for (auto& stage : stages) {
    x = stage.upsample->forward(tape, ag::leaky_relu(x, config_.leaky_slope));
    for (auto& rb : stage.resblocks) x = rb->forward(tape, x);
  }
  x = ag::tanh(post.forward(tape, ag::leaky_relu(x, config_.leaky_slope)));
  if (pqmf_) return pqmf_->synthesis(x);
  return x;
}

void Vocoder::visit(const std::string& prefix, const ParameterVisitor& fn) {
  pre.visit(join_path(prefix, "pre"), fn);
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const std::string sp = join_path(prefix, "stages." + std::to_string(s));
    stages[s].upsample->visit(join_path(sp, "upsample"), fn);
    for (std::size_t r = 0; r < stages[s].resblocks.size(); ++r)
      stages[s].resblocks[r]->visit(join_path(sp, "resblocks." + std::to_string(r)), fn);
  }
  post.visit(join_path(prefix, "post"), fn);
}

std::map<std::string, AdapterHost*> Vocoder::attachment_points() {
  std::map<std::string, AdapterHost*> out;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const std::string sp = "stages." + std::to_string(s);
    out[sp + ".upsample"] = stages[s].upsample.get();
    for (std::size_t r = 0; r < stages[s].resblocks.size(); ++r)
      out[sp + ".resblocks." + std::to_string(r)] = stages[s].resblocks[r].get();
  }
  return out;
}

}  // namespace ttsa
