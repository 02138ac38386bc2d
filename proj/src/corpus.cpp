// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include "ttsa/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ttsa/error.hpp"
#include "ttsa/nn.hpp"

namespace ttsa::corpus {

using std::numbers::pi;

std::uint64_t fnv1a(const std::string& s) { return stable_hash(s); }

const std::vector<PhoneSpec>& phone_inventory() {
  static const std::vector<PhoneSpec> inv = [] {
    std::vector<PhoneSpec> v;
    auto voiced = [&v](const char* s, double f1, double f2, double f3) {
      PhoneSpec p;
      p.symbol = s;
      p.formants[0] = f1;
      p.formants[1] = f2;
      p.formants[2] = f3;
      v.push_back(p);
    };
    auto noise = [&v](const char* s, double center, double bw) {
      PhoneSpec p;
      p.symbol = s;
      p.voiced = false;
      p.noise_center = center;
      p.noise_bandwidth = bw;
      v.push_back(p);
    };
    voiced("a", 750, 1250, 2600);
    voiced("e", 450, 2000, 2700);
    voiced("i", 300, 2300, 3000);
    voiced("o", 500, 900, 2500);
    voiced("u", 320, 800, 2300);
    voiced("@", 550, 1500, 2500);
    voiced("E", 600, 1800, 2600);
    voiced("O", 600, 1000, 2400);
    voiced("m", 280, 1100, 2200);
    voiced("n", 300, 1600, 2600);
    voiced("N", 300, 1900, 2800);
    voiced("l", 380, 1200, 2800);
    voiced("r", 420, 1300, 1700);
    voiced("w", 320, 700, 2200);
    voiced("j", 280, 2200, 3100);
    voiced("v", 250, 1500, 2400);
    noise("s", 5500, 1200);
    noise("S", 3200, 900);
    noise("f", 4500, 2500);
    noise("x", 1800, 700);
    noise("h", 1500, 2000);
    noise("T", 6000, 2000);
    noise("k", 2500, 600);
    noise("t", 4200, 1000);
    return v;
  }();
  return inv;
}

const PhoneSpec& phone(const std::string& symbol) {
  for (const auto& p : phone_inventory())
    if (p.symbol == symbol) return p;
  fail("invalid-id", "unknown corpus phone '" + symbol + "'");
}

std::vector<std::string> language_phones(const std::string& language) {
  const auto& inv = phone_inventory();
  // Vowels 0..7, voiced consonants 8..15, unvoiced 16..23: 6 + 5 + 5 per language.
  Rng rng(fnv1a("lang:" + language));
  auto pick = [&rng, &inv](int begin, int count, int take, std::vector<std::string>& out) {
    std::vector<int> idx(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) idx[static_cast<std::size_t>(i)] = begin + i;
    for (int i = count - 1; i > 0; --i) std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(rng.below(i + 1))]);
    std::sort(idx.begin(), idx.begin() + take);
    for (int i = 0; i < take; ++i) out.push_back(inv[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])].symbol);
  };
  std::vector<std::string> out;
  pick(0, 8, 6, out);
  pick(8, 8, 5, out);
  pick(16, 8, 5, out);
  return out;
}

SpeakerVoice speaker_voice(const std::string& speaker_id) {
  Rng rng(fnv1a("spk:" + speaker_id));
  SpeakerVoice v;
  v.base_f0 = rng.uniform(95.0, 230.0);
  v.formant_scale = rng.uniform(0.85, 1.18);
  v.tilt = rng.uniform(0.6, 1.4);
  return v;
}

namespace {

double envelope(const PhoneSpec& p, const SpeakerVoice& voice, double f) {
  static constexpr double kBandwidth[3] = {90.0, 140.0, 220.0};
  static constexpr double kGain[3] = {1.0, 0.6, 0.3};
  double a = 0.01;
  for (int i = 0; i < 3; ++i) {
    const double d = f - p.formants[i] * voice.formant_scale;
    a += kGain[i] * std::exp(-d * d / (2.0 * kBandwidth[i] * kBandwidth[i]));
  }
  return a * std::pow(1000.0 / std::max(f, 100.0), 0.5 * voice.tilt);
}

}  // namespace

Rendered render(std::span<const std::string> phones, std::span<const int> durations, const SpeakerVoice& voice,
                const AudioConfig& audio, std::uint64_t seed) {
  require(phones.size() == durations.size(), "invalid-argument", "render: phones and durations differ in length");
  const int hop = audio.hop_length;
  const double sr = audio.sample_rate;
  int frames = 0;
  for (int d : durations) frames += d;
  Rendered out;
  out.waveform.assign(static_cast<std::size_t>(frames) * hop, 0.0);
  out.f0.assign(static_cast<std::size_t>(frames), 0.0);
  Rng rng(seed);
  const double phase0 = rng.uniform(0.0, 2.0 * pi);
  const double wobble = rng.uniform(0.5, 1.5);
  double phase = phase0;
  const int ramp = std::max(1, static_cast<int>(0.005 * sr));

  int frame = 0;
  for (std::size_t k = 0; k < phones.size(); ++k) {
    const PhoneSpec& p = phone(phones[k]);
    const int d = durations[k];
    if (d == 0) continue;
    const double offset = rng.uniform(-0.04, 0.04);
    const int start = frame * hop, len = d * hop;
    // Two-pole resonator state for unvoiced phones.
    double y1 = 0.0, y2 = 0.0;
    const double r = p.voiced ? 0.0 : std::exp(-pi * p.noise_bandwidth / sr);
    const double c = p.voiced ? 0.0 : 2.0 * r * std::cos(2.0 * pi * p.noise_center / sr);
    const double noise_gain = p.voiced ? 0.0 : (1.0 - r) * 0.6;
    std::vector<double> amps;
    int amps_frame = -1;
    double f0_frame = 0.0;
    for (int n = 0; n < len; ++n) {
      const int fr = frame + n / hop;
      const double t = static_cast<double>(fr) / std::max(frames, 1);
      double s = 0.0;
      if (p.voiced) {
        const double f0 = voice.base_f0 * (1.0 + offset + 0.08 * std::sin(2.0 * pi * wobble * t) - 0.1 * t);
        if (fr != amps_frame) {
          amps_frame = fr;
          f0_frame = f0;
          out.f0[static_cast<std::size_t>(fr)] = f0;
          const int harmonics = std::max(1, static_cast<int>(std::min(4000.0, 0.45 * sr) / f0));
          amps.resize(static_cast<std::size_t>(harmonics));
          for (int h = 0; h < harmonics; ++h) amps[static_cast<std::size_t>(h)] = envelope(p, voice, (h + 1) * f0);
        }
        phase += 2.0 * pi * f0_frame / sr;
        if (phase > 2.0 * pi) phase -= 2.0 * pi;
        for (std::size_t h = 0; h < amps.size(); ++h) s += amps[h] * std::sin((h + 1) * phase);
        s *= 0.12;
      } else {
        const double e = rng.normal();
        const double y = noise_gain * e + c * y1 - r * r * y2;
        y2 = y1;
        y1 = y;
        s = y;
      }
      const double edge = std::min({1.0, static_cast<double>(n + 1) / ramp, static_cast<double>(len - n) / ramp});
      out.waveform[static_cast<std::size_t>(start + n)] = s * edge;
    }
    frame += d;
  }
  double peak = 0.0;
  for (double v : out.waveform) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : out.waveform) v *= 0.5 / peak;
  return out;
}

std::filesystem::path generate(const std::filesystem::path& dir, const CorpusSpec& spec) {
  require(spec.min_phones >= 1 && spec.max_phones >= spec.min_phones && spec.min_duration >= 1 &&
              spec.max_duration >= spec.min_duration,
          "config-invalid", "corpus phone/duration ranges are inconsistent");
  std::filesystem::create_directories(dir / "wavs");
  const auto inventory = language_phones(spec.language);
  Manifest m;
  m.speakers = spec.speakers;
  m.languages = {spec.language};
  for (std::size_t s = 0; s < spec.speakers.size(); ++s) {
    const auto voice = speaker_voice(spec.speakers[s]);
    for (int u = 0; u < spec.utterances_per_speaker; ++u) {
      Rng rng = Rng::derive(spec.seed, {fnv1a(spec.language), fnv1a(spec.speakers[s]), static_cast<std::uint64_t>(u)});
      ManifestEntry e;
      const int n_phones = spec.min_phones + rng.below(spec.max_phones - spec.min_phones + 1);
      int total = 0;
      while (static_cast<int>(e.phonemes.size()) < n_phones || total < spec.min_frames) {
        e.phonemes.push_back(inventory[static_cast<std::size_t>(rng.below(static_cast<int>(inventory.size())))]);
        const int d = spec.min_duration + rng.below(spec.max_duration - spec.min_duration + 1);
        e.durations.push_back(d);
        total += d;
      }
      const Rendered r = render(e.phonemes, e.durations, voice, spec.audio, rng.next_u64());
      const std::string name = spec.prefix + "_" + spec.speakers[s] + "_" + std::to_string(u) + ".wav";
      write_wav(dir / "wavs" / name, r.waveform, spec.audio.sample_rate);
      e.audio_path = (std::filesystem::path("wavs") / name).string();
      // Stored f0 is rounded so the manifest text round-trips exactly.
      for (double f : r.f0) e.f0.push_back(std::round(f * 100.0) / 100.0);
      e.speaker_id = spec.speakers[s];
      e.language_id = spec.language;
      m.entries.push_back(std::move(e));
    }
  }
  const auto path = dir / "manifest.tsv";
  write_manifest(path, m);
  return path;
}

}  // namespace ttsa::corpus
