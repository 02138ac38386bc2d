// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include "ttsa/model.hpp"

#include <algorithm>

#include "ttsa/error.hpp"

namespace ttsa {

std::vector<std::string> ModelConfig::violations() const {
  std::vector<std::string> v = audio.violations();
  for (auto& s : acoustic.violations()) v.push_back(s);
  for (auto& s : vocoder.violations(audio.hop_length)) v.push_back(s);
  for (auto& s : discriminator.violations()) v.push_back(s);
  if (vocoder.in_channels != acoustic.hidden_dim) v.push_back("vocoder.in_channels must equal acoustic.hidden_dim");
  return v;
}

namespace {

void check_config(const ModelConfig& c) {
  const auto v = c.violations();
  if (v.empty()) return;
  std::string msg;
  for (const auto& s : v) msg += (msg.empty() ? "" : "; ") + s;
  fail("config-invalid", msg);
}

}  // namespace

TtsModel::TtsModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  check_config(config);
  Rng acoustic_rng = Rng::derive(seed, {1});
  Rng vocoder_rng = Rng::derive(seed, {2});
  acoustic = std::make_unique<AcousticModel>(config.acoustic, acoustic_rng);
  vocoder = std::make_unique<Vocoder>(config.vocoder, config.audio.hop_length, vocoder_rng);
}

ConditioningTables& TtsModel::active_tables() { return conditioning_ ? *conditioning_ : acoustic->tables; }

void TtsModel::fork_conditioning() {
  require(!conditioning_, "invalid-argument", "conditioning tables are already forked");
  conditioning_ = std::make_unique<ConditioningTables>(acoustic->tables);
}

void TtsModel::register_phonemes(std::span<const std::string> symbols) {
  for (const auto& s : symbols) {
    if (vocab.phoneme_id(s)) continue;
    require(static_cast<int>(vocab.phonemes.size()) < config_.acoustic.phoneme_vocab_size, "invalid-id",
            "phoneme inventory exceeds phoneme_vocab_size " + std::to_string(config_.acoustic.phoneme_vocab_size));
    vocab.phonemes.push_back(s);
  }
}

int TtsModel::add_speaker(const std::string& id) {
  require(!vocab.speaker_id(id).has_value(), "id-collision", "speaker '" + id + "' already exists");
  auto& t = active_tables().speaker_table;
  vocab.speakers.push_back(id);
  const int need = static_cast<int>(vocab.speakers.size());
  if (t.rows() < need) t.append_mean_rows(need - t.rows());
  return need - 1;
}

int TtsModel::add_language(const std::string& id) {
  require(!vocab.language_id(id).has_value(), "id-collision", "language '" + id + "' already exists");
  auto& t = active_tables().language_table;
  vocab.languages.push_back(id);
  const int need = static_cast<int>(vocab.languages.size());
  if (t.rows() < need) t.append_mean_rows(need - t.rows());
  return need - 1;
}

int TtsModel::speaker_index(const std::string& id) const {
  auto i = vocab.speaker_id(id);
  require(i.has_value(), "invalid-id", "unknown speaker '" + id + "'");
  return *i;
}

int TtsModel::language_index(const std::string& id) const {
  auto i = vocab.language_id(id);
  require(i.has_value(), "invalid-id", "unknown language '" + id + "'");
  return *i;
}

std::map<std::string, AdapterHost*> TtsModel::attachment_points() {
  std::map<std::string, AdapterHost*> out;
  for (auto& [k, v] : acoustic->attachment_points()) out["acoustic." + k] = v;
  for (auto& [k, v] : vocoder->attachment_points()) out["vocoder." + k] = v;
  return out;
}

void TtsModel::strip_adapters() {
  for (auto& [k, host] : attachment_points()) host->slot().detach();
  conditioning_.reset();
}

int TtsModel::adapter_count() {
  int n = 0;
  for (auto& [k, host] : attachment_points()) n += host->slot().occupied() ? 1 : 0;
  return n;
}

std::vector<double> TtsModel::synthesize(std::span<const std::string> phonemes, const std::string& speaker,
                                         const std::string& language, std::vector<int>* durations) {
  return synthesize_ids(vocab.encode_phonemes(phonemes), speaker_index(speaker), language_index(language), durations);
}

std::vector<double> TtsModel::synthesize_ids(std::span<const int> phoneme_ids, int speaker, int language,
                                             std::vector<int>* durations) {
  Tape tape(false);
  AcousticOutput a = acoustic->infer(tape, phoneme_ids, speaker, language, active_tables());
  if (durations) *durations = a.durations;
  ag::Var wav = vocoder->forward(tape, a.latents);
  return wav.value().storage();
}

void TtsModel::visit(const std::string& prefix, const ParameterVisitor& fn) {
  acoustic->visit(join_path(prefix, "acoustic"), fn);
  vocoder->visit(join_path(prefix, "vocoder"), fn);
  if (conditioning_) conditioning_->visit(join_path(prefix, "conditioning"), fn);
}

bool is_adapter_parameter(const std::string& name) { return name.find(".adapter.") != std::string::npos; }

std::size_t TtsModel::backbone_parameter_count() {
  std::size_t n = 0;
  visit("", [&n](const std::string& name, Parameter& p) {
    if (!is_adapter_parameter(name) && name.rfind("conditioning.", 0) != 0) n += p.value.numel();
  });
  return n;
}

}  // namespace ttsa
