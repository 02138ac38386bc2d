// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include "ttsa/losses.hpp"

#include <cmath>

#include "ttsa/error.hpp"

namespace ttsa {

std::vector<std::string> LossWeights::violations() const {
  std::vector<std::string> v;
  if (!(fm >= 0.0)) v.push_back("losses.lambda_fm must be >= 0");
  if (!(mel >= 0.0)) v.push_back("losses.lambda_mel must be >= 0");
  if (!(stft >= 0.0)) v.push_back("losses.lambda_stft must be >= 0");
  return v;
}

std::vector<std::pair<std::string, double>> LossReport::items() const {
  return {{"L_dur", terms.dur}, {"L_f0", terms.f0},     {"L_G", terms.adv}, {"L_FM", terms.fm},
          {"L_mel", terms.mel}, {"L_STFT", terms.stft}, {"total", total},   {"L_D", disc}};
}

std::vector<double> duration_targets(std::span<const int> durations) {
  std::vector<double> t;
  t.reserve(durations.size());
  for (int d : durations) t.push_back(std::log(static_cast<double>(std::max(d, 1))));
  return t;
}

ag::Var duration_loss(const ag::Var& predicted, std::span<const double> target) {
  require(predicted.value().numel() == target.size(), "shape-mismatch",
          "duration_loss: " + std::to_string(predicted.value().numel()) + " predictions vs " +
              std::to_string(target.size()) + " targets");
  require(!target.empty(), "shape-mismatch", "duration_loss: empty input");
  Tensor t(predicted.shape(), std::vector<double>(target.begin(), target.end()));
  return ag::mean(ag::square(ag::sub(predicted, ag::constant(std::move(t)))));
}

ag::Var pitch_loss(const ag::Var& logits, std::span<const int> bins) {
  require(logits.value().rank() == 2 && logits.dim(1) == static_cast<int>(bins.size()), "shape-mismatch",
          "pitch_loss: logits " + shape_str(logits.shape()) + " vs " + std::to_string(bins.size()) + " targets");
  for (int b : bins)
    require(b >= 0 && b < logits.dim(0), "invalid-argument", "pitch_loss: bin " + std::to_string(b) + " out of range");
  return ag::cross_entropy_channels(logits, bins);
}

ag::Var generator_adversarial_loss(const std::vector<ag::Var>& fake_scores) {
  require(!fake_scores.empty(), "invalid-argument", "adversarial loss needs at least one score map");
  ag::Var acc;
  for (const auto& s : fake_scores) {
    ag::Var term = ag::mean(ag::square(ag::add_scalar(s, -1.0)));
    acc = acc.defined() ? ag::add(acc, term) : term;
  }
  return ag::scale(acc, 1.0 / static_cast<double>(fake_scores.size()));
}

ag::Var discriminator_adversarial_loss(const std::vector<ag::Var>& real_scores, const std::vector<ag::Var>& fake_scores) {
  require(!real_scores.empty() && real_scores.size() == fake_scores.size(), "invalid-argument",
          "adversarial loss needs matching, non-empty real and fake score lists");
  ag::Var acc;
  for (std::size_t k = 0; k < real_scores.size(); ++k) {
    ag::Var term = ag::add(ag::mean(ag::square(ag::add_scalar(real_scores[k], -1.0))), ag::mean(ag::square(fake_scores[k])));
    acc = acc.defined() ? ag::add(acc, term) : term;
  }
  return ag::scale(acc, 1.0 / static_cast<double>(real_scores.size()));
}

AdversarialLosses adversarial_losses(const std::vector<ag::Var>& real_scores, const std::vector<ag::Var>& fake_scores) {
  return {generator_adversarial_loss(fake_scores), discriminator_adversarial_loss(real_scores, fake_scores)};
}

ag::Var feature_matching_loss(const std::vector<std::vector<ag::Var>>& real, const std::vector<std::vector<ag::Var>>& fake) {
  require(real.size() == fake.size() && !real.empty(), "shape-mismatch",
          "feature matching needs one feature list per discriminator on both sides");
  ag::Var acc;
  int count = 0;
  for (std::size_t k = 0; k < real.size(); ++k) {
    require(real[k].size() == fake[k].size(), "shape-mismatch", "feature lists differ in depth");
    for (std::size_t l = 0; l < real[k].size(); ++l) {
      require(real[k][l].shape() == fake[k][l].shape(), "shape-mismatch",
              "feature shapes differ: " + shape_str(real[k][l].shape()) + " vs " + shape_str(fake[k][l].shape()));
      ag::Var term = ag::mean(ag::abs(ag::sub(fake[k][l], real[k][l])));
      acc = acc.defined() ? ag::add(acc, term) : term;
      ++count;
    }
  }
  require(count > 0, "shape-mismatch", "feature matching needs at least one layer");
  return ag::scale(acc, 1.0 / count);
}

ag::Var frobenius_norm(const ag::Var& x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v * v;
  const double n = std::sqrt(s);
  return ag::make_op(Tensor::scalar(n), {x}, [n](ag::Node& self) {
    if (n == 0.0) return;
    auto& in = *self.inputs[0];
    Tensor& g = in.grad_buffer();
    const double scale = self.grad[0] / n;
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] += scale * in.value[i];
  });
}

ag::Var stft_loss(const ag::Var& x, const ag::Var& x_hat, const std::vector<dsp::StftParams>& resolutions) {
  require(x.value().numel() == x_hat.value().numel(), "shape-mismatch",
          "stft_loss: signals differ in length (" + std::to_string(x.value().numel()) + " vs " +
              std::to_string(x_hat.value().numel()) + ")");
  require(!resolutions.empty(), "invalid-argument", "stft_loss needs at least one resolution");
  ag::Var acc;
  for (const auto& r : resolutions) {
    ag::Var mx = dsp::stft_magnitude(x, r);
    ag::Var my = dsp::stft_magnitude(x_hat, r);
    ag::Var sc = ag::div(frobenius_norm(ag::sub(mx, my)), frobenius_norm(mx));
    ag::Var mag = ag::mean(ag::abs(ag::sub(ag::log(mx), ag::log(my))));
    ag::Var term = ag::add(sc, mag);
    acc = acc.defined() ? ag::add(acc, term) : term;
  }
  return ag::scale(acc, 1.0 / static_cast<double>(resolutions.size()));
}

ag::Var mel_loss(const ag::Var& x, const ag::Var& x_hat, const AudioConfig& audio) {
  require(x.value().numel() == x_hat.value().numel(), "shape-mismatch", "mel_loss: signals differ in length");
  return ag::mean(ag::abs(ag::sub(log_mel(x, audio), log_mel(x_hat, audio))));
}

namespace {

void check_finite(double v, const char* name) {
  require(std::isfinite(v), "non-finite-loss", std::string("loss term ") + name + " is not finite");
}

}  // namespace

double total_loss(const LossTerms& p, const LossWeights& w) {
  check_finite(p.dur, "L_dur");
  check_finite(p.f0, "L_f0");
  check_finite(p.adv, "L_G");
  check_finite(p.fm, "L_FM");
  check_finite(p.mel, "L_mel");
  check_finite(p.stft, "L_STFT");
  return p.dur + p.f0 + p.adv + w.fm * p.fm + w.mel * p.mel + w.stft * p.stft;
}

LossTerms LossParts::values() const {
  return {dur.item(), f0.item(), adv.item(), fm.item(), mel.item(), stft.item()};
}

ag::Var total_loss(const LossParts& p, const LossWeights& w) {
  total_loss(p.values(), w);
  ag::Var t = ag::add(ag::add(p.dur, p.f0), p.adv);
  t = ag::add(t, ag::scale(p.fm, w.fm));
  t = ag::add(t, ag::scale(p.mel, w.mel));
  return ag::add(t, ag::scale(p.stft, w.stft));
}

std::vector<ag::Var> scores_of(const std::vector<DiscriminatorOutput>& outs) {
  std::vector<ag::Var> s;
  for (const auto& o : outs) s.push_back(o.scores);
  return s;
}

std::vector<std::vector<ag::Var>> features_of(const std::vector<DiscriminatorOutput>& outs) {
  std::vector<std::vector<ag::Var>> f;
  for (const auto& o : outs) f.push_back(o.features);
  return f;
}

}  // namespace ttsa
