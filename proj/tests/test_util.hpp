// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <complex>
#include <filesystem>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ttsa/autograd.hpp"
#include "ttsa/config.hpp"
#include "ttsa/corpus.hpp"
#include "ttsa/dsp.hpp"
#include "ttsa/nn.hpp"
#include "ttsa/recognizer.hpp"

namespace ttsa::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = scale * rng.normal();
  return t;
}

// Relative error ||analytic - numeric|| / max(||analytic||, ||numeric||)
// between backprop gradients and central differences of a scalar function.
inline double gradcheck(const std::function<ag::Var(const std::vector<ag::Var>&)>& f, std::vector<Tensor> inputs,
                        double eps = 1e-5) {
  std::vector<ag::Var> vars;
  for (auto& t : inputs) vars.push_back(ag::leaf(t, true));
  ag::Var out = f(vars);
  ag::backward(out);
  double num2 = 0.0, diff2 = 0.0, ana2 = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor analytic = vars[k].grad().empty() ? Tensor(inputs[k].shape()) : vars[k].grad();
    for (std::size_t i = 0; i < inputs[k].numel(); ++i) {
      auto eval = [&](double delta) {
        std::vector<ag::Var> v;
        for (std::size_t j = 0; j < inputs.size(); ++j) {
          Tensor t = inputs[j];
          if (j == k) t[i] += delta;
          v.push_back(ag::constant(t));
        }
        return f(v).item();
      };
      const double numeric = (eval(eps) - eval(-eps)) / (2.0 * eps);
      const double a = analytic[i];
      num2 += numeric * numeric;
      ana2 += a * a;
      diff2 += (a - numeric) * (a - numeric);
    }
  }
  const double denom = std::max({std::sqrt(num2), std::sqrt(ana2), 1e-12});
  return std::sqrt(diff2) / denom;
}

// Scalar probe: sum of x weighted by a fixed random tensor, so every output
// element contributes a distinct gradient.
inline ag::Var weighted_sum(const ag::Var& x, std::uint64_t seed = 99) {
  Rng rng(seed);
  Tensor w(x.shape());
  for (double& v : w.values()) v = rng.normal();
  return ag::sum(ag::mul(x, ag::constant(w)));
}

inline int reflect_index(int i, int n) {
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

// Direct DFT of reflect-padded, Hann-windowed frames.
inline Tensor naive_stft(const std::vector<double>& x, const dsp::StftParams& p) {
  constexpr double pi = std::numbers::pi;
  const int n = static_cast<int>(x.size());
  const int frames = (n + p.hop - 1) / p.hop;
  const int bins = p.n_fft / 2 + 1;
  const int offset = (p.n_fft - p.win) / 2;
  Tensor out({bins, frames});
  for (int f = 0; f < frames; ++f)
    for (int k = 0; k < bins; ++k) {
      std::complex<double> acc = 0.0;
      for (int j = 0; j < p.n_fft; ++j) {
        const int wj = j - offset;
        const double w = (wj >= 0 && wj < p.win) ? 0.5 - 0.5 * std::cos(2.0 * pi * wj / p.win) : 0.0;
        const double s = x[static_cast<std::size_t>(reflect_index(f * p.hop + j - p.n_fft / 2, n))];
        acc += w * s * std::polar(1.0, -2.0 * pi * k * j / p.n_fft);
      }
      out.at(k, f) = std::sqrt(std::max(std::norm(acc), 1e-7));
    }
  return out;
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("ttsa_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// Small networks with the default topology, fast enough for unit tests.
inline RunConfig tiny_run_config() {
  RunConfig c;
  c.seed = 17;
  auto& a = c.model.acoustic;
  a.hidden_dim = a.embed_dim = 32;
  a.encoder_kernels = {5, 9};
  a.decoder_kernels = {9, 5};
  auto& v = c.model.vocoder;
  v.in_channels = v.pre_channels = 32;
  v.stage_channels = {8, 8, 4};
  auto& d = c.model.discriminator;
  d.mpd_channels = {4, 8, 8, 8};
  d.mrd_channels = 4;
  d.mrd_layers = 2;
  c.training.batch_size = 1;
  c.training.segment_frames = 8;
  c.training.lr_backbone = 1e-3;
  c.training.lr_adapters = 1e-3;
  c.training.lr_full = 1e-3;
  c.training.checkpoint_every = 0;
  return c;
}

inline std::filesystem::path make_corpus(const std::filesystem::path& dir, std::vector<std::string> speakers,
                                         int per_speaker, std::uint64_t seed, const std::string& language = "L1",
                                         const std::string& prefix = "utt") {
  corpus::CorpusSpec spec;
  spec.speakers = std::move(speakers);
  spec.utterances_per_speaker = per_speaker;
  spec.seed = seed;
  spec.language = language;
  spec.prefix = prefix;
  return corpus::generate(dir, spec);
}

// Recognizer whose "audio" spells its transcript: each sample codes one
// frame, (i + 1) / 64 for symbol i and 0 for blank. Survives 16-bit WAV.
class SampleCodeRecognizer : public PhonemeRecognizer {
 public:
  explicit SampleCodeRecognizer(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {}

  const std::vector<std::string>& symbols() const override { return symbols_; }

  Tensor posteriors(std::span<const double> waveform) const override {
    const int k = static_cast<int>(symbols_.size()) + 1;
    const double hit = std::log(0.9), miss = std::log(0.1 / (k - 1));
    Tensor out({static_cast<int>(waveform.size()), k}, miss);
    for (std::size_t t = 0; t < waveform.size(); ++t) {
      int code = static_cast<int>(std::lround(waveform[t] * 64.0)) - 1;
      if (code < 0 || code >= k - 1) code = k - 1;
      out.at(static_cast<int>(t), code) = hit;
    }
    return out;
  }

  // Symbols separated by blanks, so repeats survive decoding.
  std::vector<double> speak(std::span<const std::string> phonemes) const {
    std::vector<double> w = {0.0};
    for (const auto& p : phonemes) {
      int i = 0;
      while (i < static_cast<int>(symbols_.size()) && symbols_[static_cast<std::size_t>(i)] != p) ++i;
      w.push_back((i + 1) / 64.0);
      w.push_back(0.0);
    }
    return w;
  }

 private:
  std::vector<std::string> symbols_;
};

}  // namespace ttsa::testing
