// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "ttsa/autograd.hpp"

namespace ttsa::dsp {

struct StftParams {
  int n_fft = 1024;
  int hop = 256;
  int win = 1024;
};

// Periodic Hann window of `win_length` samples, zero-padded to n_fft and
// centered.
std::vector<double> hann_window(int win_length, int n_fft);

// Centered analysis yields ceil(length / hop) frames; frame t is centered on
// sample t * hop.
int num_frames(int length, int hop);

// Flat sample index for every (tap, frame) pair of a centered framing with
// reflect padding, laid out as [n_fft, frames]. Requires length > n_fft / 2.
std::vector<int> frame_index_map(int length, int n_fft, int hop);

// Minimum signal length for which reflect-padded framing is defined.
int min_signal_length(const StftParams& p);

// signal: any shape holding T samples. Returns windowed |STFT|, [n_fft/2 + 1, frames].
ag::Var stft_magnitude(const ag::Var& signal, const StftParams& p, double power_floor = 1e-7);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Center frequency (Hz) of each mel band.
std::vector<double> mel_band_centers(int n_mels, double fmin, double fmax);

// Triangular HTK-scale filters, [n_mels, n_fft/2 + 1].
Tensor mel_filterbank(int sample_rate, int n_fft, int n_mels, double fmin, double fmax);

// Pseudo-quadrature mirror filterbank (cosine-modulated Kaiser prototype).
class Pqmf {
 public:
  explicit Pqmf(int subbands, int taps = 62, double cutoff_ratio = 0.142, double beta = 9.0);

  int subbands() const { return subbands_; }
  // [1, T] -> [K, T / K]
  ag::Var analysis(const ag::Var& x) const;
  // [K, T] -> [1, K * T]
  ag::Var synthesis(const ag::Var& x) const;

 private:
  int subbands_;
  int taps_;
  ag::Var analysis_filter_;   // [K, 1, taps + 1]
  ag::Var synthesis_filter_;  // [1, K, taps + 1]
};

}  // namespace ttsa::dsp
