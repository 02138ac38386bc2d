// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "ttsa/error.hpp"
#include "ttsa/losses.hpp"

namespace ttsa {
namespace {

using testing::gradcheck;
using testing::naive_stft;
using testing::random_tensor;

ag::Var C(const Tensor& t) { return ag::constant(t); }

std::vector<double> noise(int n, std::uint64_t seed, double scale = 0.3) {
  Rng rng(seed);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (double& v : x) v = scale * rng.normal();
  return x;
}

Tensor wave(const std::vector<double>& x) { return Tensor({1, static_cast<int>(x.size())}, x); }

template <typename F>
std::string category_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.category();
  }
  return "";
}

// ---- duration ------------------------------------------------------------

TEST(DurationLoss, ClosedForms) {
  const std::vector<double> t{0.0, std::log(3.0), std::log(7.0)};
  Tensor p({1, 3}, t);
  EXPECT_DOUBLE_EQ(duration_loss(C(p), t).item(), 0.0);
  for (double& v : p.values()) v += 1.0;
  EXPECT_NEAR(duration_loss(C(p), t).item(), 1.0, 1e-12);
}

TEST(DurationLoss, TargetsAreLogOfClampedFrames) {
  const std::vector<int> d{0, 1, 4};
  const auto t = duration_targets(d);
  EXPECT_DOUBLE_EQ(t[0], 0.0);
  EXPECT_DOUBLE_EQ(t[1], 0.0);
  EXPECT_DOUBLE_EQ(t[2], std::log(4.0));
}

TEST(DurationLoss, RandomFixtureAgainstHandMse) {
  Rng rng(1);
  const Tensor p = random_tensor({1, 9}, rng);
  std::vector<double> t(9);
  for (double& v : t) v = rng.normal();
  double mse = 0;
  for (int i = 0; i < 9; ++i) mse += (p[i] - t[i]) * (p[i] - t[i]) / 9.0;
  EXPECT_NEAR(duration_loss(C(p), t).item(), mse, 1e-12);
  EXPECT_EQ(category_of([&] { duration_loss(C(p), std::vector<double>(8)); }), "shape-mismatch");
  EXPECT_LT(gradcheck([&t](const std::vector<ag::Var>& v) { return duration_loss(v[0], t); }, {p}), 1e-6);
}

// ---- pitch ---------------------------------------------------------------

TEST(PitchLoss, UniformLogitsGiveLog256) {
  const std::vector<int> bins{0, 17, 255, 128};
  EXPECT_NEAR(pitch_loss(C(Tensor({256, 4}, 0.3)), bins).item(), std::log(256.0), 1e-12);
}

TEST(PitchLoss, MarginDrivesLossToZero) {
  const std::vector<int> bins{5, 9};
  double prev = 1e9;
  for (double margin : {1.0, 5.0, 20.0, 60.0}) {
    Tensor l({256, 2}, 0.0);
    l.at(5, 0) = margin;
    l.at(9, 1) = margin;
    const double v = pitch_loss(C(l), bins).item();
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 1e-20);
}

TEST(PitchLoss, TwoFrameHandComputation) {
  Rng rng(2);
  const Tensor l = random_tensor({256, 2}, rng);
  const std::vector<int> bins{3, 200};
  double ce = 0;
  for (int f = 0; f < 2; ++f) {
    double z = 0;
    for (int k = 0; k < 256; ++k) z += std::exp(l.at(k, f));
    ce += (std::log(z) - l.at(bins[f], f)) / 2.0;
  }
  EXPECT_NEAR(pitch_loss(C(l), bins).item(), ce, 1e-9);
  EXPECT_LT(gradcheck([&bins](const std::vector<ag::Var>& v) { return pitch_loss(v[0], bins); }, {l}), 1e-6);
}

TEST(PitchLoss, OutOfRangeBin) {
  const std::vector<int> bad{256};
  EXPECT_EQ(category_of([&] { pitch_loss(C(Tensor({256, 1})), bad); }), "invalid-argument");
}

// ---- adversarial ---------------------------------------------------------

std::vector<ag::Var> filled(double v) {
  return {C(Tensor({1, 4, 3}, v)), C(Tensor({1, 7}, v)), C(Tensor({1, 2, 2}, v))};
}

TEST(Adversarial, Optima) {
  EXPECT_DOUBLE_EQ(generator_adversarial_loss(filled(1.0)).item(), 0.0);
  EXPECT_DOUBLE_EQ(discriminator_adversarial_loss(filled(1.0), filled(0.0)).item(), 0.0);
  EXPECT_DOUBLE_EQ(discriminator_adversarial_loss(filled(0.0), filled(1.0)).item(), 2.0);
  const auto both = adversarial_losses(filled(0.0), filled(1.0));
  EXPECT_DOUBLE_EQ(both.generator.item(), 0.0);
  EXPECT_DOUBLE_EQ(both.discriminator.item(), 2.0);
  EXPECT_EQ(category_of([] { generator_adversarial_loss({}); }), "invalid-argument");
}

TEST(Adversarial, AveragedOverDiscriminatorsAndElements) {
  Rng rng(3);
  std::vector<Tensor> real{random_tensor({1, 5}, rng), random_tensor({2, 3}, rng)};
  std::vector<Tensor> fake{random_tensor({1, 5}, rng), random_tensor({2, 3}, rng)};
  double lg = 0, ld = 0;
  for (std::size_t k = 0; k < 2; ++k) {
    double g = 0, dr = 0, df = 0;
    for (std::size_t i = 0; i < fake[k].numel(); ++i) {
      g += (fake[k][i] - 1) * (fake[k][i] - 1);
      df += fake[k][i] * fake[k][i];
      dr += (real[k][i] - 1) * (real[k][i] - 1);
    }
    const double n = static_cast<double>(fake[k].numel());
    lg += g / n / 2;
    ld += (dr / n + df / n) / 2;
  }
  std::vector<ag::Var> rv{C(real[0]), C(real[1])}, fv{C(fake[0]), C(fake[1])};
  EXPECT_NEAR(generator_adversarial_loss(fv).item(), lg, 1e-12);
  EXPECT_NEAR(discriminator_adversarial_loss(rv, fv).item(), ld, 1e-12);
  EXPECT_GE(generator_adversarial_loss(fv).item(), 0.0);

  std::vector<Tensor> in{real[0], real[1], fake[0], fake[1]};
  EXPECT_LT(gradcheck([](const std::vector<ag::Var>& v) { return generator_adversarial_loss({v[2], v[3]}); }, in), 1e-6);
  EXPECT_LT(gradcheck([](const std::vector<ag::Var>& v) {
              return discriminator_adversarial_loss({v[0], v[1]}, {v[2], v[3]});
            }, in), 1e-6);
}

// ---- feature matching ----------------------------------------------------

TEST(FeatureMatching, ClosedForms) {
  Rng rng(4);
  std::vector<std::vector<ag::Var>> real{{C(random_tensor({2, 5}, rng)), C(random_tensor({3, 4}, rng))},
                                         {C(random_tensor({1, 6}, rng))}};
  EXPECT_DOUBLE_EQ(feature_matching_loss(real, real).item(), 0.0);
  auto shifted = real;
  for (auto& layers : shifted)
    for (auto& f : layers) f = ag::add_scalar(f, 0.75);
  EXPECT_NEAR(feature_matching_loss(real, shifted).item(), 0.75, 1e-12);
  std::vector<std::vector<ag::Var>> bad{{C(Tensor({2, 5})), C(Tensor({3, 3}))}, {C(Tensor({1, 6}))}};
  EXPECT_EQ(category_of([&] { feature_matching_loss(real, bad); }), "shape-mismatch");
}

TEST(FeatureMatching, TwoLayerHandSumAndGradient) {
  Rng rng(5);
  const Tensor r0 = random_tensor({2, 3}, rng), r1 = random_tensor({4, 2}, rng);
  const Tensor f0 = random_tensor({2, 3}, rng), f1 = random_tensor({4, 2}, rng);
  double l0 = 0, l1 = 0;
  for (std::size_t i = 0; i < 6; ++i) l0 += std::abs(f0[i] - r0[i]) / 6;
  for (std::size_t i = 0; i < 8; ++i) l1 += std::abs(f1[i] - r1[i]) / 8;
  EXPECT_NEAR(feature_matching_loss({{C(r0), C(r1)}}, {{C(f0), C(f1)}}).item(), (l0 + l1) / 2, 1e-12);
  EXPECT_LT(gradcheck([](const std::vector<ag::Var>& v) { return feature_matching_loss({{v[0], v[1]}}, {{v[2], v[3]}}); },
                      {r0, r1, f0, f1}),
            1e-6);
}

// ---- STFT ----------------------------------------------------------------

const std::vector<dsp::StftParams> kResolutions{{1024, 120, 600}, {2048, 240, 1200}, {512, 50, 240}};

TEST(StftLoss, IdenticalSignalsGiveZero) {
  const auto x = noise(2400, 6);
  EXPECT_DOUBLE_EQ(stft_loss(C(wave(x)), C(wave(x)), kResolutions).item(), 0.0);
}

TEST(StftLoss, DoubledSignalClosedForm) {
  const auto x = noise(2400, 7);
  auto y = x;
  for (double& v : y) v *= 2;
  // Spectral convergence is exactly 1 and every log-magnitude bin differs by ln 2.
  EXPECT_NEAR(stft_loss(C(wave(x)), C(wave(y)), kResolutions).item(), 1.0 + std::log(2.0), 1e-9);
}

TEST(StftLoss, WhiteNoiseAgainstDirectDft) {
  const auto x = noise(1500, 8), y = noise(1500, 9);
  double expected = 0;
  for (const auto& r : kResolutions) {
    const Tensor mx = naive_stft(x, r), my = naive_stft(y, r);
    double num = 0, den = 0, mag = 0;
    for (std::size_t i = 0; i < mx.numel(); ++i) {
      num += (mx[i] - my[i]) * (mx[i] - my[i]);
      den += mx[i] * mx[i];
      mag += std::abs(std::log(mx[i]) - std::log(my[i]));
    }
    expected += (std::sqrt(num) / std::sqrt(den) + mag / static_cast<double>(mx.numel())) / kResolutions.size();
  }
  EXPECT_NEAR(stft_loss(C(wave(x)), C(wave(y)), kResolutions).item(), expected, 1e-5);
}

TEST(StftLoss, ErrorsAndGradient) {
  const auto a = noise(1000, 10), b = noise(1100, 11);
  EXPECT_EQ(category_of([&] { stft_loss(C(wave(a)), C(wave(b)), kResolutions); }), "shape-mismatch");
  EXPECT_EQ(category_of([&] { stft_loss(C(wave(a)), C(wave(a)), kResolutions); }), "signal-too-short");
  const std::vector<dsp::StftParams> small{{32, 8, 32}, {16, 4, 16}};
  const Tensor x = wave(noise(40, 12)), y = wave(noise(40, 13));
  EXPECT_LT(gradcheck([&small](const std::vector<ag::Var>& v) { return stft_loss(v[0], v[1], small); }, {x, y}), 1e-3);
}

// ---- mel -----------------------------------------------------------------

TEST(MelLoss, IdenticalAndDistinguishable) {
  const AudioConfig audio;
  const auto x = noise(4096, 14);
  EXPECT_DOUBLE_EQ(mel_loss(C(wave(x)), C(wave(x)), audio).item(), 0.0);
  std::vector<double> silence(4096, 0.0), impulses(4096, 0.0);
  for (std::size_t i = 0; i < impulses.size(); i += 100) impulses[i] = 1.0;
  EXPECT_GT(mel_loss(C(wave(silence)), C(wave(impulses)), audio).item(), 0.0);
}

TEST(MelLoss, MatchesL1OnCachedMels) {
  const AudioConfig audio;
  const auto x = noise(3000, 15), y = noise(3000, 16);
  const auto dir = testing::fresh_dir("mel_cache");
  save_array(dir / "x.mel", compute_mel(x, audio));
  save_array(dir / "y.mel", compute_mel(y, audio));
  const Tensor mx = load_array(dir / "x.mel"), my = load_array(dir / "y.mel");
  double l1 = 0;
  for (std::size_t i = 0; i < mx.numel(); ++i) l1 += std::abs(mx[i] - my[i]) / static_cast<double>(mx.numel());
  EXPECT_NEAR(mel_loss(C(wave(x)), C(wave(y)), audio).item(), l1, 1e-9);
}

TEST(MelLoss, Gradient) {
  AudioConfig audio;
  audio.n_fft = audio.win_length = 32;
  audio.hop_length = 8;
  audio.mel_bins = 6;
  const Tensor x = wave(noise(48, 17)), y = wave(noise(48, 18));
  EXPECT_LT(gradcheck([&audio](const std::vector<ag::Var>& v) { return mel_loss(v[0], v[1], audio); }, {x, y}), 1e-3);
}

// ---- total ---------------------------------------------------------------

TEST(TotalLoss, ArithmeticAndLinearity) {
  EXPECT_DOUBLE_EQ(total_loss(LossTerms{}, LossWeights{}), 0.0);
  EXPECT_DOUBLE_EQ(total_loss(LossTerms{1, 1, 1, 1, 1, 1}, LossWeights{1, 1, 1}), 6.0);
  Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    LossTerms p{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    LossWeights w{rng.uniform(0, 5), rng.uniform(0, 50), rng.uniform(0, 5)};
    const double hand = p.dur + p.f0 + p.adv + w.fm * p.fm + w.mel * p.mel + w.stft * p.stft;
    EXPECT_NEAR(total_loss(p, w), hand, 1e-9);
    LossWeights w2 = w;
    w2.mel += 1.0;
    EXPECT_NEAR(total_loss(p, w2) - total_loss(p, w), p.mel, 1e-9);
    LossParts parts{C(Tensor::scalar(p.dur)), C(Tensor::scalar(p.f0)),  C(Tensor::scalar(p.adv)),
                    C(Tensor::scalar(p.fm)),  C(Tensor::scalar(p.mel)), C(Tensor::scalar(p.stft))};
    EXPECT_EQ(total_loss(parts, w).item(), total_loss(p, w));
  }
}

TEST(TotalLoss, NonFiniteTermIsNamed) {
  LossTerms p{};
  p.stft = std::nan("");
  try {
    total_loss(p, LossWeights{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), "non-finite-loss");
    EXPECT_NE(std::string(e.what()).find("L_STFT"), std::string::npos);
  }
}

TEST(TotalLoss, ReportItemsInOrder) {
  LossReport r;
  r.terms = {1, 2, 3, 4, 5, 6};
  r.total = 7;
  r.disc = 8;
  const auto items = r.items();
  ASSERT_EQ(items.size(), 8u);
  const char* names[] = {"L_dur", "L_f0", "L_G", "L_FM", "L_mel", "L_STFT", "total", "L_D"};
  for (int i = 0; i < 8; ++i) {
    EXPECT_EQ(items[i].first, names[i]);
    EXPECT_EQ(items[i].second, i + 1.0);
  }
}

}  // namespace
}  // namespace ttsa
