// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

// The generator (acoustic model + vocoder) with its id vocabularies and the
// optional fine-tune copy of the conditioning tables.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ttsa/acoustic.hpp"
#include "ttsa/dataio.hpp"
#include "ttsa/discriminator.hpp"
#include "ttsa/vocoder.hpp"

namespace ttsa {

struct ModelConfig {
  AudioConfig audio;
  AcousticConfig acoustic;
  VocoderConfig vocoder;
  DiscriminatorConfig discriminator;

  std::vector<std::string> violations() const;
};

class TtsModel : public Module {
 public:
  TtsModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }

  // Base tables unless a fine-tune copy exists.
  ConditioningTables& active_tables();
  bool has_conditioning_fork() const { return static_cast<bool>(conditioning_); }
  // Copies the base tables into trainable "conditioning.*" parameters so the
  // base tables stay untouched during adapter fine-tuning.
  void fork_conditioning();
  void drop_conditioning_fork() { conditioning_.reset(); }

  // Assigns ids to unseen phoneme symbols (bounded by the embedding rows).
  void register_phonemes(std::span<const std::string> symbols);
  // Appends a speaker/language id with a mean-initialized row in the active
  // tables. Returns the new index.
  int add_speaker(const std::string& id);
  int add_language(const std::string& id);

  int speaker_index(const std::string& id) const;
  int language_index(const std::string& id) const;

  // Fully qualified ("acoustic.encoder.layers.0.convs.1", "vocoder.stages.0.upsample", ...).
  std::map<std::string, AdapterHost*> attachment_points();
  void strip_adapters();
  int adapter_count();

  // Deterministic inference. Returns the waveform and, optionally, the
  // rounded durations used.
  std::vector<double> synthesize(std::span<const std::string> phonemes, const std::string& speaker,
                                 const std::string& language, std::vector<int>* durations = nullptr);
  std::vector<double> synthesize_ids(std::span<const int> phoneme_ids, int speaker, int language,
                                     std::vector<int>* durations = nullptr);

  void visit(const std::string& prefix, const ParameterVisitor& fn) override;
  // Parameters that belong to the pre-trained backbone (no adapters, no fork).
  std::size_t backbone_parameter_count();

  Vocabulary vocab;
  std::unique_ptr<AcousticModel> acoustic;
  std::unique_ptr<Vocoder> vocoder;

 private:
  ModelConfig config_;
  std::unique_ptr<ConditioningTables> conditioning_;
};

bool is_adapter_parameter(const std::string& name);

}  // namespace ttsa
