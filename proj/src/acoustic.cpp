// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include "ttsa/acoustic.hpp"

#include <cmath>

#include "ttsa/error.hpp"

namespace ttsa {

int AcousticConfig::conv_layer_count() const {
  return (encoder_layers() + decoder_layers()) * convs_per_layer + 2 * predictor_convs;
}

std::vector<std::string> AcousticConfig::violations() const {
  std::vector<std::string> v;
  if (phoneme_vocab_size < 1) v.push_back("acoustic.phoneme_vocab_size must be >= 1");
  if (embed_dim != hidden_dim) v.push_back("acoustic.embed_dim must equal acoustic.hidden_dim");
  if (hidden_dim < 2 || hidden_dim % 2 != 0) v.push_back("acoustic.hidden_dim must be even and >= 2");
  if (encoder_kernels.empty()) v.push_back("acoustic.encoder_kernels must list at least one layer");
  if (decoder_kernels.empty()) v.push_back("acoustic.decoder_kernels must list at least one layer");
  for (int k : encoder_kernels)
    if (k < 1 || k % 2 == 0) v.push_back("acoustic.encoder_kernels entries must be odd and >= 1");
  for (int k : decoder_kernels)
    if (k < 1 || k % 2 == 0) v.push_back("acoustic.decoder_kernels entries must be odd and >= 1");
  if (convs_per_layer < 1) v.push_back("acoustic.convs_per_layer must be >= 1");
  if (predictor_convs < 1) v.push_back("acoustic.predictor_convs must be >= 1");
  if (predictor_kernel < 1 || predictor_kernel % 2 == 0) v.push_back("acoustic.predictor_kernel must be odd");
  if (n_speakers < 1) v.push_back("acoustic.n_speakers must be >= 1");
  if (n_languages < 1) v.push_back("acoustic.n_languages must be >= 1");
  if (pitch_bins != 256) v.push_back("acoustic.pitch_bins must be 256");
  return v;
}

SepConv::SepConv(int channels, int kernel, Rng& rng)
    : depthwise(channels, channels, kernel, rng, 1, channels),
      pointwise(channels, channels, 1, rng),
      norm(channels),
      channels_(channels) {}

ag::Var SepConv::forward(Tape& tape, const ag::Var& x) {
  ag::Var y = norm.forward(tape, ag::relu(pointwise.forward(tape, depthwise.forward(tape, x))));
  return slot_.apply(tape, y);
}

void SepConv::visit(const std::string& prefix, const ParameterVisitor& fn) {
  depthwise.visit(join_path(prefix, "depthwise"), fn);
  pointwise.visit(join_path(prefix, "pointwise"), fn);
  norm.visit(join_path(prefix, "norm"), fn);
  slot_.visit(prefix, fn);
}

ConvBlock::ConvBlock(int channels, int kernel, int n, Rng& rng) {
  for (int i = 0; i < n; ++i) convs.emplace_back(channels, kernel, rng);
}

ag::Var ConvBlock::forward(Tape& tape, const ag::Var& x) {
  ag::Var y = x;
  for (auto& c : convs) y = c.forward(tape, y);
  return ag::add(x, y);
}

void ConvBlock::visit(const std::string& prefix, const ParameterVisitor& fn) {
  for (std::size_t j = 0; j < convs.size(); ++j) convs[j].visit(join_path(prefix, "convs." + std::to_string(j)), fn);
}

Predictor::Predictor(int channels, int kernel, int n, int out_dim, Rng& rng) {
  for (int i = 0; i < n; ++i) convs.emplace_back(channels, kernel, rng);
  head_weight.value = Tensor({out_dim, channels});
  head_bias.value = Tensor({out_dim});
  init_uniform_fan_in(head_weight, channels, rng);
}

ag::Var Predictor::forward(Tape& tape, const ag::Var& x) {
  ag::Var y = x;
  for (auto& c : convs) y = c.forward(tape, y);
  return ag::add_channel(ag::matmul(tape.param(head_weight), y), tape.param(head_bias));
}

void Predictor::visit(const std::string& prefix, const ParameterVisitor& fn) {
  for (std::size_t j = 0; j < convs.size(); ++j) convs[j].visit(join_path(prefix, "convs." + std::to_string(j)), fn);
  fn(join_path(prefix, "head.weight"), head_weight);
  fn(join_path(prefix, "head.bias"), head_bias);
}

void ConditioningTables::visit(const std::string& prefix, const ParameterVisitor& fn) {
  phoneme_embedding.visit(join_path(prefix, "phoneme_embedding"), fn);
  speaker_table.visit(join_path(prefix, "speaker_table"), fn);
  language_table.visit(join_path(prefix, "language_table"), fn);
}

int AcousticOutput::frames() const { return latents.defined() ? latents.dim(1) : 0; }

int round_duration(double log_duration) {
  const double d = std::floor(std::exp(log_duration) + 0.5);
  if (!(d >= 1.0)) return 1;
  return d > 1e6 ? 1000000 : static_cast<int>(d);
}

ag::Var length_regulate(const ag::Var& h, std::span<const int> durations) {
  require(h.value().rank() == 2 && h.dim(1) == static_cast<int>(durations.size()), "shape-mismatch",
          "length_regulate: " + std::to_string(durations.size()) + " durations for hidden " + shape_str(h.shape()));
  int frames = 0;
  for (int d : durations) {
    require(d >= 0, "invalid-argument", "length_regulate: negative duration");
    frames += d;
  }
  require(frames > 0, "invalid-argument", "length_regulate: durations sum to zero (empty utterance)");
  const int c = h.dim(0), n = h.dim(1);
  std::vector<int> src(static_cast<std::size_t>(frames));
  int f = 0;
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < durations[static_cast<std::size_t>(i)]; ++r) src[static_cast<std::size_t>(f++)] = i;
  std::vector<int> index(static_cast<std::size_t>(c) * frames);
  for (int ch = 0; ch < c; ++ch)
    for (int t = 0; t < frames; ++t)
      index[static_cast<std::size_t>(ch) * frames + t] = ch * n + src[static_cast<std::size_t>(t)];
  return ag::gather(h, std::move(index), {c, frames});
}

Tensor sinusoidal_positions(int dim, int length) {
  Tensor pe({dim, length});
  for (int i = 0; i < dim / 2; ++i) {
    const double rate = std::pow(10000.0, -2.0 * i / dim);
    for (int p = 0; p < length; ++p) {
      pe.at(2 * i, p) = std::sin(p * rate);
      pe.at(2 * i + 1, p) = std::cos(p * rate);
    }
  }
  return pe;
}

AcousticModel::AcousticModel(const AcousticConfig& config, Rng& rng) : config_(config) {
  const auto v = config.violations();
  if (!v.empty()) {
    std::string msg;
    for (const auto& s : v) msg += (msg.empty() ? "" : "; ") + s;
    fail("config-invalid", msg);
  }
  const int c = config.hidden_dim;
  const double std = 1.0 / std::sqrt(static_cast<double>(c));
  tables.phoneme_embedding = Embedding(config.phoneme_vocab_size, c, rng, std);
  tables.speaker_table = Embedding(config.n_speakers, c, rng, std);
  tables.language_table = Embedding(config.n_languages, c, rng, std);
  for (int k : config.encoder_kernels) encoder.emplace_back(c, k, config.convs_per_layer, rng);
  duration_predictor = Predictor(c, config.predictor_kernel, config.predictor_convs, 1, rng);
  pitch_predictor = Predictor(c, config.predictor_kernel, config.predictor_convs, config.pitch_bins, rng);
  pitch_embedding = Embedding(config.pitch_bins, c, rng, std);
  for (int k : config.decoder_kernels) decoder.emplace_back(c, k, config.convs_per_layer, rng);
}

ag::Var AcousticModel::encode(Tape& tape, std::span<const int> phoneme_ids, int speaker_id, int language_id,
                              ConditioningTables& t) {
  require(!phoneme_ids.empty(), "invalid-argument", "encode: empty phoneme sequence");
  for (int id : phoneme_ids)
    require(id >= 0 && id < t.phoneme_embedding.rows(), "invalid-id", "phoneme id " + std::to_string(id) + " out of range");
  require(speaker_id >= 0 && speaker_id < t.speaker_table.rows(), "invalid-id",
          "speaker id " + std::to_string(speaker_id) + " out of range [0, " + std::to_string(t.speaker_table.rows()) + ")");
  require(language_id >= 0 && language_id < t.language_table.rows(), "invalid-id",
          "language id " + std::to_string(language_id) + " out of range [0, " +
              std::to_string(t.language_table.rows()) + ")");
  const int n = static_cast<int>(phoneme_ids.size());
  ag::Var x = t.phoneme_embedding.forward(tape, phoneme_ids);
  x = ag::add(x, ag::constant(sinusoidal_positions(config_.hidden_dim, n)));
  const int spk[1] = {speaker_id}, lang[1] = {language_id};
  ag::Var cond = ag::add(t.speaker_table.forward(tape, spk), t.language_table.forward(tape, lang));
  x = ag::add_channel(x, cond);
  for (auto& block : encoder) x = block.forward(tape, x);
  return x;
}

ag::Var AcousticModel::predict_duration(Tape& tape, const ag::Var& hidden) {
  require(hidden.value().rank() == 2 && hidden.dim(0) == config_.hidden_dim && hidden.dim(1) > 0, "shape-mismatch",
          "predict_duration expects non-empty [hidden, N]");
  return duration_predictor.forward(tape, hidden);
}

ag::Var AcousticModel::predict_pitch(Tape& tape, const ag::Var& frame_hidden) {
  require(frame_hidden.value().rank() == 2 && frame_hidden.dim(0) == config_.hidden_dim, "shape-mismatch",
          "predict_pitch expects [hidden, frames]");
  if (frame_hidden.dim(1) == 0) return ag::constant(Tensor({config_.pitch_bins, 0}));
  return pitch_predictor.forward(tape, frame_hidden);
}

ag::Var AcousticModel::add_pitch(Tape& tape, const ag::Var& frame_hidden, std::span<const int> bins) {
  require(static_cast<int>(bins.size()) == frame_hidden.dim(1), "shape-mismatch",
          "add_pitch: " + std::to_string(bins.size()) + " bins for " + std::to_string(frame_hidden.dim(1)) + " frames");
  for (int b : bins) require(b >= 0 && b < config_.pitch_bins, "invalid-argument", "pitch bin out of range");
  return ag::add(frame_hidden, pitch_embedding.forward(tape, bins));
}

ag::Var AcousticModel::decode(Tape& tape, const ag::Var& frame_hidden) {
  require(frame_hidden.value().rank() == 2 && frame_hidden.dim(0) == config_.hidden_dim && frame_hidden.dim(1) > 0,
          "shape-mismatch", "decode expects non-empty [hidden, frames]");
  ag::Var x = frame_hidden;
  for (auto& block : decoder) x = block.forward(tape, x);
  return x;
}

AcousticOutput AcousticModel::forward_teacher(Tape& tape, std::span<const int> phoneme_ids, int speaker_id,
                                              int language_id, std::span<const int> durations,
                                              std::span<const int> pitch_bins, ConditioningTables& t) {
  AcousticOutput out;
  ag::Var h = encode(tape, phoneme_ids, speaker_id, language_id, t);
  out.log_durations = predict_duration(tape, h);
  out.durations.assign(durations.begin(), durations.end());
  ag::Var frames = length_regulate(h, durations);
  out.pitch_logits = predict_pitch(tape, frames);
  out.pitch_bins.assign(pitch_bins.begin(), pitch_bins.end());
  out.latents = decode(tape, add_pitch(tape, frames, pitch_bins));
  return out;
}

AcousticOutput AcousticModel::infer(Tape& tape, std::span<const int> phoneme_ids, int speaker_id, int language_id,
                                    ConditioningTables& t) {
  AcousticOutput out;
  ag::Var h = encode(tape, phoneme_ids, speaker_id, language_id, t);
  out.log_durations = predict_duration(tape, h);
  for (double v : out.log_durations.value().values()) out.durations.push_back(round_duration(v));
  ag::Var frames = length_regulate(h, out.durations);
  out.pitch_logits = predict_pitch(tape, frames);
  const Tensor& logits = out.pitch_logits.value();
  const int bins = logits.dim(0), f = logits.dim(1);
  out.pitch_bins.resize(static_cast<std::size_t>(f));
  for (int j = 0; j < f; ++j) {
    int best = 0;
    for (int b = 1; b < bins; ++b)
      if (logits.at(b, j) > logits.at(best, j)) best = b;
    out.pitch_bins[static_cast<std::size_t>(j)] = best;
  }
  out.latents = decode(tape, add_pitch(tape, frames, out.pitch_bins));
  return out;
}

void AcousticModel::visit(const std::string& prefix, const ParameterVisitor& fn) {
  tables.visit(join_path(prefix, "tables"), fn);
  for (std::size_t l = 0; l < encoder.size(); ++l) encoder[l].visit(join_path(prefix, "encoder.layers." + std::to_string(l)), fn);
  duration_predictor.visit(join_path(prefix, "duration_predictor"), fn);
  pitch_predictor.visit(join_path(prefix, "pitch_predictor"), fn);
  pitch_embedding.visit(join_path(prefix, "pitch_embedding"), fn);
  for (std::size_t l = 0; l < decoder.size(); ++l) decoder[l].visit(join_path(prefix, "decoder.layers." + std::to_string(l)), fn);
}

std::map<std::string, AdapterHost*> AcousticModel::attachment_points() {
  std::map<std::string, AdapterHost*> out;
  auto add_block = [&out](const std::string& base, std::vector<SepConv>& convs) {
    for (std::size_t j = 0; j < convs.size(); ++j) out[base + ".convs." + std::to_string(j)] = &convs[j];
  };
  for (std::size_t l = 0; l < encoder.size(); ++l) add_block("encoder.layers." + std::to_string(l), encoder[l].convs);
  for (std::size_t l = 0; l < decoder.size(); ++l) add_block("decoder.layers." + std::to_string(l), decoder[l].convs);
  add_block("duration_predictor", duration_predictor.convs);
  add_block("pitch_predictor", pitch_predictor.convs);
  return out;
}

}  // namespace ttsa
