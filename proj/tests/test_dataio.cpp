// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "ttsa/corpus.hpp"
#include "ttsa/dataio.hpp"
#include "ttsa/dsp.hpp"
#include "ttsa/error.hpp"
#include "ttsa/nn.hpp"

namespace ttsa {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("ttsa_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string category_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.category();
  }
  return "";
}

TEST(Pitch, CenterUnvoicedAndClipBins) {
  const PitchStats st{200.0, 20.0};
  const std::vector<double> f0 = {200.0, 0.0, 200.0 - 3 * 20.0, 100.0, 200.0 + 3 * 20.0, 400.0};
  const auto bins = quantize_pitch(f0, st);
  // z = 0: 1 + floor(3 / (6/255)) = 1 + floor(127.5) = 128.
  EXPECT_EQ(bins[0], 128);
  EXPECT_EQ(bins[1], 0);
  EXPECT_EQ(bins[2], 1);
  EXPECT_EQ(bins[3], 1);
  EXPECT_EQ(bins[4], 255);
  EXPECT_EQ(bins[5], 255);
}

TEST(Pitch, MonotoneAndWithinOneBin) {
  const PitchStats st{150.0, 30.0};
  Rng rng(5);
  std::vector<double> f0(2000);
  for (double& f : f0) f = rng.uniform(1.0, 400.0);
  std::sort(f0.begin(), f0.end());
  const auto bins = quantize_pitch(f0, st);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    ASSERT_GE(bins[i], 1);
    ASSERT_LE(bins[i], 255);
    if (i > 0) EXPECT_LE(bins[i - 1], bins[i]);
    const double z = std::clamp((f0[i] - st.mean) / st.std, -3.0, 3.0);
    EXPECT_LE(std::abs(pitch_bin_center(bins[i]) - z), pitch_bin_width());
  }
}

TEST(Pitch, ZeroStdIsAnError) {
  EXPECT_EQ(category_of([] { quantize_pitch(std::vector<double>{100.0}, PitchStats{100.0, 0.0}); }),
            "degenerate-pitch-stats");
}

TEST(Mel, ZeroWaveformIsLogFloor) {
  AudioConfig c;
  const Tensor m = compute_mel(std::vector<double>(256 * 8, 0.0), c);
  ASSERT_EQ(m.shape(), (Shape{8, 80}));
  for (double v : m.values()) EXPECT_NEAR(v, std::log(kMelFloor), 1e-9);
}

TEST(Mel, SineAtBandCenterPeaksInThatBand) {
  AudioConfig c;
  const auto centers = dsp::mel_band_centers(c.mel_bins, c.fmin, c.fmax);
  for (int band : {10, 30, 55}) {
    const double f = centers[static_cast<std::size_t>(band)];
    std::vector<double> x(256 * 12);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.5 * std::sin(2.0 * std::numbers::pi * f * i / c.sample_rate);
    const Tensor m = compute_mel(x, c);
    const int t = 6;
    int best = 0;
    for (int k = 1; k < c.mel_bins; ++k)
      if (m.at(t, k) > m.at(t, best)) best = k;
    EXPECT_EQ(best, band);
  }
}

TEST(Mel, FrameCountAndShortInput) {
  AudioConfig c;
  EXPECT_EQ(compute_mel(std::vector<double>(256 * 13, 0.1), c).dim(0), 13);
  EXPECT_EQ(category_of([&c] { compute_mel(std::vector<double>(500, 0.1), c); }), "signal-too-short");
}

TEST(Manifest, EmptyFileHasNoEntries) {
  const fs::path dir = temp_dir("empty_manifest");
  std::ofstream(dir / "m.tsv").close();
  EXPECT_EQ(load_manifest(dir / "m.tsv").entries.size(), 0u);
}

TEST(Manifest, MismatchedDurationsNameTheEntry) {
  const std::string text = "a.wav\tx y\t1,2\t0,0,0\tS1\tL1\nb.wav\tx y z\t1,2\t0,0,0\tS1\tL1\n";
  try {
    parse_manifest(text, "/data");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), "manifest-invalid");
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("b.wav"), std::string::npos);
  }
}

TEST(Manifest, ParseErrorsCarryLineNumbers) {
  try {
    parse_manifest("# comment\n\na.wav\tx\t1\n", "/data");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), "manifest-parse");
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Manifest, UndeclaredSpeakerIsRejected) {
  EXPECT_EQ(category_of([] { parse_manifest("#!speakers\tS1\na.wav\tx\t1\t0\tS2\tL1\n", "/d"); }),
            "manifest-invalid");
}

TEST(Manifest, ThreeLineFixtureCounts) {
  // Hand count: speakers {S1, S2}, languages {L1}, phonemes {a, b, c, d}.
  const std::string text =
      "one.wav\ta b\t2,3\t0,100,100,0,0\tS1\tL1\n"
      "two.wav\tb c\t1,1\t120,120\tS2\tL1\n"
      "three.wav\td a c\t1,1,2\t0,0,0,0\tS1\tL1\n";
  const Manifest m = parse_manifest(text, "/data");
  EXPECT_EQ(m.entries.size(), 3u);
  EXPECT_EQ(m.speakers.size(), 2u);
  EXPECT_EQ(m.languages.size(), 1u);
  EXPECT_EQ(m.phonemes.size(), 4u);
  EXPECT_EQ(m.entries[2].total_frames(), 4);
  EXPECT_EQ(m.entries[0].audio_path, "/data/one.wav");
}

TEST(Manifest, GeneratedCorpusRoundTripsAndReconciles) {
  const fs::path dir = temp_dir("corpus");
  corpus::CorpusSpec spec;
  spec.speakers = {"S1", "S2"};
  spec.utterances_per_speaker = 3;
  const fs::path path = corpus::generate(dir, spec);
  const Manifest m = load_manifest(path);
  ASSERT_EQ(m.entries.size(), 6u);
  Vocabulary vocab{m.phonemes, m.speakers, m.languages};
  const auto utts = build_utterances(m, vocab, spec.audio, true);
  for (const auto& u : utts) {
    EXPECT_EQ(u.waveform.size(), static_cast<std::size_t>(u.frames()) * 256);
    EXPECT_EQ(u.pitch_bins.size(), static_cast<std::size_t>(u.frames()));
    EXPECT_EQ(u.mel.dim(0), u.frames());
    for (int b : u.pitch_bins) {
      EXPECT_GE(b, 0);
      EXPECT_LE(b, 255);
    }
  }
}

TEST(Manifest, OffByOneFrameIsTruncated) {
  const fs::path dir = temp_dir("reconcile");
  write_wav(dir / "a.wav", std::vector<double>(256 * 6, 0.1), 16000);
  std::ofstream(dir / "m.tsv") << "a.wav\tx y\t3,4\t0,0,0,0,0,0,0\tS1\tL1\n";
  const Manifest m = load_manifest(dir / "m.tsv");
  const auto utts = build_utterances(m, Vocabulary{m.phonemes, m.speakers, m.languages}, AudioConfig{});
  EXPECT_EQ(utts[0].frames(), 6);
  EXPECT_EQ(utts[0].durations, (std::vector<int>{3, 3}));
}

TEST(Cache, ArraysRoundTripExactly) {
  const fs::path dir = temp_dir("cache");
  Tensor t({2, 3}, std::vector<double>{1.5, -2.0, 1e-300, 3.14159, 0.0, -7.25});
  save_array(dir / "a.bin", t);
  const Tensor back = load_array(dir / "a.bin");
  EXPECT_EQ(back.shape(), t.shape());
  EXPECT_EQ(back.storage(), t.storage());
  const std::vector<int> ints = {0, 255, 128, 7};
  save_int_array(dir / "i.bin", ints);
  EXPECT_EQ(load_int_array(dir / "i.bin"), ints);
  EXPECT_EQ(category_of([&dir] { load_int_array(dir / "a.bin"); }), "array-format");
}

TEST(Wav, Pcm16RoundTrip) {
  const fs::path dir = temp_dir("wav");
  std::vector<double> x = {0.0, 0.5, -0.5, 1.0, -1.0, 0.25};
  write_wav(dir / "x.wav", x, 16000);
  const Wav w = read_wav(dir / "x.wav");
  EXPECT_EQ(w.sample_rate, 16000);
  ASSERT_EQ(w.samples.size(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(w.samples[i], x[i], 1.0 / 32767);
  EXPECT_EQ(wav_num_samples(dir / "x.wav"), x.size());
}

TEST(AudioConfigCheck, ListsEveryViolation) {
  AudioConfig c;
  c.hop_length = 300;
  c.fmax = 9000;
  EXPECT_EQ(c.violations().size(), 2u);
}

}  // namespace
}  // namespace ttsa
