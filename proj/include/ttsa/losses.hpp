// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

// Training objectives. The generator minimizes
//   L = L_dur + L_f0 + L_G + w_fm L_FM + w_mel L_mel + w_stft L_STFT
// and the discriminators minimize L_D (least-squares GAN).

#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ttsa/dataio.hpp"
#include "ttsa/discriminator.hpp"
#include "ttsa/dsp.hpp"

namespace ttsa {

struct LossWeights {
  double fm = 2.0;
  double mel = 45.0;
  double stft = 1.0;

  std::vector<std::string> violations() const;
};

// Scalar values of every term.
struct LossTerms {
  double dur = 0.0;
  double f0 = 0.0;
  double adv = 0.0;
  double fm = 0.0;
  double mel = 0.0;
  double stft = 0.0;
};

struct LossReport {
  LossTerms terms;
  double total = 0.0;
  double disc = 0.0;

  // ("L_dur", v), ..., ("total", v), ("L_D", v)
  std::vector<std::pair<std::string, double>> items() const;
};

// Log-domain duration targets: log(max(d, 1)).
std::vector<double> duration_targets(std::span<const int> durations);

// Mean squared error between predicted log-durations [1, N] (or [N]) and targets.
ag::Var duration_loss(const ag::Var& predicted, std::span<const double> target);
// Mean per-frame cross-entropy; logits [bins, frames].
ag::Var pitch_loss(const ag::Var& logits, std::span<const int> bins);

// mean_k mean (D_k(x_hat) - 1)^2
ag::Var generator_adversarial_loss(const std::vector<ag::Var>& fake_scores);
// mean_k [mean (D_k(x) - 1)^2 + mean D_k(x_hat)^2]
ag::Var discriminator_adversarial_loss(const std::vector<ag::Var>& real_scores, const std::vector<ag::Var>& fake_scores);

struct AdversarialLosses {
  ag::Var generator;
  ag::Var discriminator;
};
AdversarialLosses adversarial_losses(const std::vector<ag::Var>& real_scores, const std::vector<ag::Var>& fake_scores);

// Mean absolute difference, averaged over every (discriminator, layer) pair.
ag::Var feature_matching_loss(const std::vector<std::vector<ag::Var>>& real, const std::vector<std::vector<ag::Var>>& fake);

// Average over resolutions of spectral convergence plus mean log-magnitude L1.
ag::Var stft_loss(const ag::Var& x, const ag::Var& x_hat, const std::vector<dsp::StftParams>& resolutions);
// Mean absolute difference of log-mel spectrograms.
ag::Var mel_loss(const ag::Var& x, const ag::Var& x_hat, const AudioConfig& audio);

// Frobenius norm with a zero subgradient at the origin.
ag::Var frobenius_norm(const ag::Var& x);

// Exact weighted sum; throws "non-finite-loss" naming the first bad term.
double total_loss(const LossTerms& parts, const LossWeights& w);

struct LossParts {
  ag::Var dur, f0, adv, fm, mel, stft;
  LossTerms values() const;
};
// Graph form of total_loss with the same evaluation order.
ag::Var total_loss(const LossParts& parts, const LossWeights& w);

std::vector<ag::Var> scores_of(const std::vector<DiscriminatorOutput>& outs);
std::vector<std::vector<ag::Var>> features_of(const std::vector<DiscriminatorOutput>& outs);

}  // namespace ttsa
