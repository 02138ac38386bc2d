// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include "ttsa/recognizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ttsa/checkpoint.hpp"
#include "ttsa/error.hpp"

namespace ttsa {

std::vector<int> ctc_decode(const Tensor& posteriors, int blank) {
  require(posteriors.rank() == 2, "shape-mismatch", "posteriors must be [frames, symbols]");
  const int t = posteriors.dim(0), k = posteriors.dim(1);
  require(0 <= blank && blank < k, "invalid-argument", "blank index outside posterior columns");
  std::vector<int> out;
  int prev = -1;
  for (int f = 0; f < t; ++f) {
    int best = 0;
    for (int c = 1; c < k; ++c)
      if (posteriors.at(f, c) > posteriors.at(f, best)) best = c;
    if (best != prev && best != blank) out.push_back(best);
    prev = best;
  }
  return out;
}

std::vector<std::string> ctc_decode(const Tensor& posteriors, const PhonemeRecognizer& recognizer) {
  std::vector<std::string> out;
  for (int id : ctc_decode(posteriors, recognizer.blank())) out.push_back(recognizer.symbols()[static_cast<std::size_t>(id)]);
  return out;
}

std::vector<std::string> transcribe(const PhonemeRecognizer& recognizer, std::span<const double> waveform) {
  return ctc_decode(recognizer.posteriors(waveform), recognizer);
}

double ctc_loss_value(const Tensor& posteriors, std::span<const int> labels, int blank) {
  return ag::ctc_loss(ag::constant(posteriors.transposed()), labels, blank).item();
}

std::vector<LabeledAudio> labeled_audio(const Manifest& manifest) {
  std::vector<LabeledAudio> out;
  out.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    LabeledAudio a;
    a.id = std::filesystem::path(e.audio_path).stem().string();
    a.waveform = read_wav(e.audio_path).samples;
    a.phonemes = e.phonemes;
    out.push_back(std::move(a));
  }
  return out;
}

// ---- convolutional recognizer --------------------------------------------

ConvRecognizer::ConvRecognizer(std::vector<std::string> symbols, const ConvRecognizerConfig& config, std::uint64_t seed)
    : symbols_(std::move(symbols)), config_(config) {
  require(!symbols_.empty(), "invalid-argument", "recognizer needs at least one phoneme");
  require(!config_.kernels.empty() && config_.hidden > 0, "config-invalid", "recognizer needs layers");
  Rng rng = Rng::derive(seed, {0x7ec});
  int in = config_.audio.mel_bins;
  for (int k : config_.kernels) {
    require(k % 2 == 1, "config-invalid", "recognizer kernels must be odd");
    convs_.emplace_back(in, config_.hidden, k, rng);
    norms_.emplace_back(config_.hidden);
    in = config_.hidden;
  }
  head_ = Conv1d(in, static_cast<int>(symbols_.size()) + 1, 1, rng);
}

ag::Var ConvRecognizer::features(std::span<const double> waveform) const {
  const auto n = static_cast<int>(waveform.size());
  Tensor mel = log_mel(ag::constant(Tensor({1, n}, std::vector<double>(waveform.begin(), waveform.end()))), config_.audio)
                   .value();
  // Per-utterance mean normalization of every band.
  const int bins = mel.dim(0), frames = mel.dim(1);
  for (int b = 0; b < bins; ++b) {
    double mu = 0.0;
    for (int f = 0; f < frames; ++f) mu += mel.at(b, f);
    mu /= frames;
    for (int f = 0; f < frames; ++f) mel.at(b, f) = (mel.at(b, f) - mu) * 0.25;
  }
  return ag::constant(std::move(mel));
}

ag::Var ConvRecognizer::forward(Tape& tape, std::span<const double> waveform) {
  ag::Var h = features(waveform);
  for (std::size_t i = 0; i < convs_.size(); ++i) h = ag::relu(norms_[i].forward(tape, convs_[i].forward(tape, h)));
  return ag::log_softmax_channels(head_.forward(tape, h));
}

Tensor ConvRecognizer::posteriors(std::span<const double> waveform) const {
  Tape tape(false);
  return const_cast<ConvRecognizer*>(this)->forward(tape, waveform).value().transposed();
}

void ConvRecognizer::visit(const std::string& prefix, const ParameterVisitor& fn) {
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    convs_[i].visit(join_path(prefix, "convs." + std::to_string(i)), fn);
    norms_[i].visit(join_path(prefix, "norms." + std::to_string(i)), fn);
  }
  head_.visit(join_path(prefix, "head"), fn);
}

std::vector<int> ConvRecognizer::encode(std::span<const std::string> phonemes) const {
  std::vector<int> ids;
  for (const auto& p : phonemes) {
    auto it = std::find(symbols_.begin(), symbols_.end(), p);
    require(it != symbols_.end(), "invalid-id", "phoneme '" + p + "' is not in the recognizer vocabulary");
    ids.push_back(static_cast<int>(it - symbols_.begin()));
  }
  return ids;
}

namespace {

ag::Var utterance_loss(ConvRecognizer& r, Tape& tape, const LabeledAudio& u) {
  try {
    const auto labels = r.encode(u.phonemes);
    return ag::ctc_loss(r.forward(tape, u.waveform), labels, r.blank());
  } catch (const Error& e) {
    fail(e.category(), "utterance " + u.id + ": " + e.what());
  }
}

}  // namespace

std::vector<double> ctc_train(ConvRecognizer& recognizer, std::span<const LabeledAudio> corpus,
                              const CtcTrainOptions& options) {
  require(!corpus.empty(), "invalid-argument", "empty recognizer training corpus");
  AdamW opt(options.optimizer);
  const auto params = named_parameters(recognizer, "");
  std::vector<std::size_t> order(corpus.size());
  std::vector<double> history;
  for (int e = 0; e < options.epochs; ++e) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::derive(options.seed, {static_cast<std::uint64_t>(e)});
    for (std::size_t k = order.size() - 1; k > 0; --k)
      std::swap(order[k], order[static_cast<std::size_t>(rng.below(static_cast<int>(k) + 1))]);
    double sum = 0.0;
    for (std::size_t i : order) {
      zero_grads(params);
      Tape tape;
      ag::Var loss = utterance_loss(recognizer, tape, corpus[i]);
      require(std::isfinite(loss.item()), "non-finite-loss", "CTC loss is not finite for " + corpus[i].id);
      sum += loss.item();
      ag::backward(loss);
      tape.accumulate();
      opt.step(params, options.lr);
    }
    history.push_back(sum / static_cast<double>(corpus.size()));
  }
  return history;
}

double ctc_corpus_loss(ConvRecognizer& recognizer, std::span<const LabeledAudio> corpus) {
  require(!corpus.empty(), "invalid-argument", "empty corpus");
  double sum = 0.0;
  for (const auto& u : corpus) {
    Tape tape(false);
    sum += utterance_loss(recognizer, tape, u).item();
  }
  return sum / static_cast<double>(corpus.size());
}

void save_recognizer(const std::filesystem::path& path, ConvRecognizer& recognizer) {
  Checkpoint c;
  const auto& cfg = recognizer.config();
  c.meta["format"] = "ttsa-recognizer";
  c.meta["symbols"] = recognizer.symbols();
  c.meta["hidden"] = cfg.hidden;
  c.meta["kernels"] = cfg.kernels;
  c.meta["audio"] = {{"sample_rate", cfg.audio.sample_rate}, {"hop_length", cfg.audio.hop_length},
                     {"win_length", cfg.audio.win_length},   {"n_fft", cfg.audio.n_fft},
                     {"mel_bins", cfg.audio.mel_bins},       {"fmin", cfg.audio.fmin},
                     {"fmax", cfg.audio.fmax}};
  recognizer.visit("", [&c](const std::string& name, Parameter& p) { c.arrays.emplace_back(name, p.value); });
  save_checkpoint(path, c);
}

ConvRecognizer load_recognizer(const std::filesystem::path& path) {
  const Checkpoint c = load_checkpoint(path);
  try {
    require(c.meta.at("format") == "ttsa-recognizer", "checkpoint-format", path.string() + " is not a recognizer");
    ConvRecognizerConfig cfg;
    cfg.hidden = c.meta.at("hidden").get<int>();
    cfg.kernels = c.meta.at("kernels").get<std::vector<int>>();
    const auto& a = c.meta.at("audio");
    cfg.audio.sample_rate = a.at("sample_rate").get<int>();
    cfg.audio.hop_length = a.at("hop_length").get<int>();
    cfg.audio.win_length = a.at("win_length").get<int>();
    cfg.audio.n_fft = a.at("n_fft").get<int>();
    cfg.audio.mel_bins = a.at("mel_bins").get<int>();
    cfg.audio.fmin = a.at("fmin").get<double>();
    cfg.audio.fmax = a.at("fmax").get<double>();
    ConvRecognizer r(c.meta.at("symbols").get<std::vector<std::string>>(), cfg, 0);
    const auto idx = c.index();
    std::size_t used = 0;
    r.visit("", [&](const std::string& name, Parameter& p) {
      auto it = idx.find(name);
      require(it != idx.end() && it->second->shape() == p.value.shape(), "checkpoint-format",
              "recognizer parameter " + name + " missing or mis-shaped");
      p.value = *it->second;
      ++used;
    });
    require(used == c.arrays.size(), "checkpoint-format", "recognizer file holds unknown arrays");
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail("checkpoint-format", std::string("malformed recognizer metadata: ") + e.what());
  }
}

}  // namespace ttsa
