// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include "ttsa/discriminator.hpp"

#include <algorithm>
#include <numeric>

#include "ttsa/error.hpp"

namespace ttsa {

std::vector<std::string> DiscriminatorConfig::violations() const {
  std::vector<std::string> v;
  if (mpd_periods.empty()) v.push_back("discriminator.mpd_periods must not be empty");
  for (std::size_t i = 0; i < mpd_periods.size(); ++i) {
    if (mpd_periods[i] < 1) v.push_back("discriminator.mpd_periods entries must be >= 1");
    for (std::size_t j = i + 1; j < mpd_periods.size(); ++j)
      if (std::gcd(mpd_periods[i], mpd_periods[j]) != 1)
        v.push_back("discriminator.mpd_periods must be pairwise coprime (" + std::to_string(mpd_periods[i]) + ", " +
                    std::to_string(mpd_periods[j]) + ")");
  }
  if (mpd_channels.empty()) v.push_back("discriminator.mpd_channels must not be empty");
  if (mrd_resolutions.size() < 2) v.push_back("discriminator.mrd_resolutions needs at least 2 entries");
  for (const auto& r : mrd_resolutions)
    if (r.n_fft < 2 || r.hop < 1 || r.win < 1 || r.win > r.n_fft)
      v.push_back("discriminator.mrd_resolutions entries need n_fft >= win >= 1 and hop >= 1");
  if (mrd_channels < 1 || mrd_layers < 1) v.push_back("discriminator.mrd_channels and mrd_layers must be >= 1");
  return v;
}

int DiscriminatorConfig::min_length() const {
  int m = 1;
  for (const auto& r : mrd_resolutions) m = std::max(m, dsp::min_signal_length(r));
  for (int p : mpd_periods) m = std::max(m, p);
  return m;
}

ag::Var period_grid(const ag::Var& x, int period) {
  const int t = static_cast<int>(x.value().numel());
  const int rows = (t + period - 1) / period;
  std::vector<int> index(static_cast<std::size_t>(rows) * period);
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = static_cast<int>(i) < t ? static_cast<int>(i) : -1;
  return ag::gather(x, std::move(index), {1, rows, period});
}

PeriodDiscriminator::PeriodDiscriminator(int period, const std::vector<int>& channels, double slope, Rng& rng)
    : period_(period), slope_(slope) {
  int in = 1;
  for (int c : channels) {
    layers.emplace_back(in, c, 5, 1, ag::Conv2dOptions{3, 1, 2, 0}, rng);
    in = c;
  }
  layers.emplace_back(in, in, 5, 1, ag::Conv2dOptions{1, 1, 2, 0}, rng);
  post = Conv2d(in, 1, 3, 1, ag::Conv2dOptions{1, 1, 1, 0}, rng);
}

DiscriminatorOutput PeriodDiscriminator::forward(Tape& tape, const ag::Var& x) {
  DiscriminatorOutput out;
  ag::Var h = period_grid(x, period_);
  for (auto& l : layers) {
    h = ag::leaky_relu(l.forward(tape, h), slope_);
    out.features.push_back(h);
  }
  out.scores = post.forward(tape, h);
  return out;
}

void PeriodDiscriminator::visit(const std::string& prefix, const ParameterVisitor& fn) {
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i].visit(join_path(prefix, "layers." + std::to_string(i)), fn);
  post.visit(join_path(prefix, "post"), fn);
}

ResolutionDiscriminator::ResolutionDiscriminator(const dsp::StftParams& stft, int channels, int n_layers, double slope,
                                                 Rng& rng)
    : stft_(stft), slope_(slope) {
  int in = 1;
  for (int i = 0; i < n_layers; ++i) {
    layers.emplace_back(in, channels, 9, 3, ag::Conv2dOptions{2, 1, 4, 1}, rng);
    in = channels;
  }
  post = Conv2d(in, 1, 3, 3, ag::Conv2dOptions{1, 1, 1, 1}, rng);
}

DiscriminatorOutput ResolutionDiscriminator::forward(Tape& tape, const ag::Var& x) {
  DiscriminatorOutput out;
  ag::Var mag = dsp::stft_magnitude(x, stft_);
  ag::Var h = ag::reshape(mag, {1, mag.dim(0), mag.dim(1)});
  for (auto& l : layers) {
    h = ag::leaky_relu(l.forward(tape, h), slope_);
    out.features.push_back(h);
  }
  out.scores = post.forward(tape, h);
  return out;
}

void ResolutionDiscriminator::visit(const std::string& prefix, const ParameterVisitor& fn) {
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i].visit(join_path(prefix, "layers." + std::to_string(i)), fn);
  post.visit(join_path(prefix, "post"), fn);
}

DiscriminatorSet::DiscriminatorSet(const DiscriminatorConfig& config, Rng& rng) : config_(config) {
  const auto v = config.violations();
  if (!v.empty()) {
    std::string msg;
    for (const auto& s : v) msg += (msg.empty() ? "" : "; ") + s;
    fail("config-invalid", msg);
  }
  for (int p : config.mpd_periods) mpd.emplace_back(p, config.mpd_channels, config.leaky_slope, rng);
  for (const auto& r : config.mrd_resolutions)
    mrd.emplace_back(r, config.mrd_channels, config.mrd_layers, config.leaky_slope, rng);
}

std::vector<DiscriminatorOutput> DiscriminatorSet::forward(Tape& tape, const ag::Var& waveform) {
  const int t = static_cast<int>(waveform.value().numel());
  require(t >= config_.min_length(), "signal-too-short",
          "discriminators need at least " + std::to_string(config_.min_length()) + " samples, got " + std::to_string(t));
  ag::Var x = ag::reshape(waveform, {1, t});
  std::vector<DiscriminatorOutput> out;
  for (auto& d : mpd) out.push_back(d.forward(tape, x));
  for (auto& d : mrd) out.push_back(d.forward(tape, x));
  return out;
}

void DiscriminatorSet::visit(const std::string& prefix, const ParameterVisitor& fn) {
  for (std::size_t i = 0; i < mpd.size(); ++i) mpd[i].visit(join_path(prefix, "mpd." + std::to_string(i)), fn);
  for (std::size_t i = 0; i < mrd.size(); ++i) mrd[i].visit(join_path(prefix, "mrd." + std::to_string(i)), fn);
}

}  // namespace ttsa
