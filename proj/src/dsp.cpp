// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include "ttsa/dsp.hpp"

#include <cmath>
#include <numbers>

#include "ttsa/error.hpp"

namespace ttsa::dsp {

using std::numbers::pi;

std::vector<double> hann_window(int win_length, int n_fft) {
  require(win_length > 0 && win_length <= n_fft, "config-invalid",
          "window length " + std::to_string(win_length) + " must be in (0, n_fft=" + std::to_string(n_fft) + "]");
  std::vector<double> w(static_cast<std::size_t>(n_fft), 0.0);
  const int offset = (n_fft - win_length) / 2;
  for (int i = 0; i < win_length; ++i)
    w[static_cast<std::size_t>(offset + i)] = 0.5 - 0.5 * std::cos(2.0 * pi * i / win_length);
  return w;
}

int num_frames(int length, int hop) { return (length + hop - 1) / hop; }

int min_signal_length(const StftParams& p) { return std::max(p.win, p.n_fft / 2 + 1); }

std::vector<int> frame_index_map(int length, int n_fft, int hop) {
  require(length > n_fft / 2, "signal-too-short",
          "signal of " + std::to_string(length) + " samples is too short for n_fft " + std::to_string(n_fft));
  const int frames = num_frames(length, hop);
  std::vector<int> idx(static_cast<std::size_t>(n_fft) * frames);
  const int half = n_fft / 2;
  for (int n = 0; n < n_fft; ++n)
    for (int f = 0; f < frames; ++f) {
      int p = f * hop - half + n;
      if (p < 0) p = -p;
      if (p >= length) p = 2 * (length - 1) - p;
      idx[static_cast<std::size_t>(n) * frames + f] = p;
    }
  return idx;
}

ag::Var stft_magnitude(const ag::Var& signal, const StftParams& p, double power_floor) {
  const int length = static_cast<int>(signal.value().numel());
  require(length >= min_signal_length(p), "signal-too-short",
          "signal of " + std::to_string(length) + " samples shorter than analysis window (needs " +
              std::to_string(min_signal_length(p)) + ")");
  const int frames = num_frames(length, p.hop);
  ag::Var framed = ag::gather(signal, frame_index_map(length, p.n_fft, p.hop), {p.n_fft, frames});
  const auto w = hann_window(p.win, p.n_fft);
  ag::Var window = ag::constant(Tensor({p.n_fft}, w));
  return ag::rfft_magnitude(ag::mul_channel(framed, window), power_floor);
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_band_centers(int n_mels, double fmin, double fmax) {
  const double lo = hz_to_mel(fmin), hi = hz_to_mel(fmax);
  std::vector<double> c(static_cast<std::size_t>(n_mels));
  for (int m = 0; m < n_mels; ++m) c[static_cast<std::size_t>(m)] = mel_to_hz(lo + (hi - lo) * (m + 1) / (n_mels + 1));
  return c;
}

Tensor mel_filterbank(int sample_rate, int n_fft, int n_mels, double fmin, double fmax) {
  require(fmin < fmax && fmax <= sample_rate / 2.0, "config-invalid", "mel range must satisfy fmin < fmax <= sr/2");
  const int bins = n_fft / 2 + 1;
  const double lo = hz_to_mel(fmin), hi = hz_to_mel(fmax);
  std::vector<double> edges(static_cast<std::size_t>(n_mels + 2));
  for (int i = 0; i < n_mels + 2; ++i) edges[static_cast<std::size_t>(i)] = mel_to_hz(lo + (hi - lo) * i / (n_mels + 1));
  Tensor fb({n_mels, bins});
  for (int m = 0; m < n_mels; ++m) {
    const double left = edges[static_cast<std::size_t>(m)];
    const double center = edges[static_cast<std::size_t>(m + 1)];
    const double right = edges[static_cast<std::size_t>(m + 2)];
    for (int b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b) * sample_rate / n_fft;
      const double up = (f - left) / (center - left);
      const double down = (right - f) / (right - center);
      fb.at(m, b) = std::max(0.0, std::min(up, down));
    }
  }
  return fb;
}

namespace {

std::vector<double> kaiser(int n, double beta) {
  std::vector<double> w(static_cast<std::size_t>(n));
  const double denom = std::cyl_bessel_i(0.0, beta);
  for (int i = 0; i < n; ++i) {
    const double r = 2.0 * i / (n - 1) - 1.0;
    w[static_cast<std::size_t>(i)] = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / denom;
  }
  return w;
}

}  // namespace

Pqmf::Pqmf(int subbands, int taps, double cutoff_ratio, double beta) : subbands_(subbands), taps_(taps) {
  require(subbands >= 1 && taps % 2 == 0, "config-invalid", "PQMF needs >= 1 subband and an even tap count");
  const int n = taps + 1;
  const double wc = pi * cutoff_ratio;
  const auto win = kaiser(n, beta);
  std::vector<double> proto(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double m = i - 0.5 * taps;
    const double ideal = m == 0.0 ? cutoff_ratio : std::sin(wc * m) / (pi * m);
    proto[static_cast<std::size_t>(i)] = ideal * win[static_cast<std::size_t>(i)];
  }
  Tensor ana({subbands, 1, n});
  Tensor syn({1, subbands, n});
  for (int k = 0; k < subbands; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    for (int i = 0; i < n; ++i) {
      const double arg = (2 * k + 1) * (pi / (2.0 * subbands)) * (i - 0.5 * taps);
      ana[static_cast<std::size_t>(k) * n + i] = 2.0 * proto[static_cast<std::size_t>(i)] * std::cos(arg + sign * pi / 4.0);
      syn[static_cast<std::size_t>(k) * n + i] = 2.0 * proto[static_cast<std::size_t>(i)] * std::cos(arg - sign * pi / 4.0);
    }
  }
  analysis_filter_ = ag::constant(std::move(ana));
  synthesis_filter_ = ag::constant(std::move(syn));
}

ag::Var Pqmf::analysis(const ag::Var& x) const {
  require(x.value().rank() == 2 && x.dim(0) == 1, "shape-mismatch", "PQMF analysis expects [1, T]");
  ag::Conv1dOptions opt;
  opt.stride = subbands_;
  opt.pad_left = opt.pad_right = taps_ / 2;
  return ag::conv1d(x, analysis_filter_, ag::Var(), opt);
}

ag::Var Pqmf::synthesis(const ag::Var& x) const {
  require(x.value().rank() == 2 && x.dim(0) == subbands_, "shape-mismatch", "PQMF synthesis expects [K, T]");
  const int k = subbands_, t = x.dim(1);
  std::vector<int> idx(static_cast<std::size_t>(k) * t * k, -1);
  for (int c = 0; c < k; ++c)
    for (int j = 0; j < t; ++j) idx[static_cast<std::size_t>(c) * t * k + static_cast<std::size_t>(j) * k] = c * t + j;
  ag::Var up = ag::scale(ag::gather(x, std::move(idx), {k, t * k}), static_cast<double>(k));
  ag::Conv1dOptions opt;
  opt.pad_left = opt.pad_right = taps_ / 2;
  return ag::conv1d(up, synthesis_filter_, ag::Var(), opt);
}

}  // namespace ttsa::dsp
