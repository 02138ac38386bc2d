// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

// Run configuration. Files are JSON objects; any key may be omitted and then
// takes the built-in default (see configs/default.json, which mirrors
// default_config_json()). Unknown keys are rejected.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "ttsa/adapters.hpp"
#include "ttsa/losses.hpp"
#include "ttsa/model.hpp"
#include "ttsa/optimizer.hpp"

namespace ttsa {

struct TrainingConfig {
  std::int64_t steps = 1000000;
  int batch_size = 128;
  int grad_accumulation = 1;  // micro-batches per optimizer step
  int segment_frames = 16;    // vocoder/discriminator window, in frames
  int log_every = 1;
  int checkpoint_every = 1000;
  int finetune_epochs = 200;
  int steps_per_epoch = 0;  // 0: one pass over the data
  double lr_backbone = 2e-4;
  double lr_full = 1e-5;
  double lr_adapters = 1e-4;
};

struct RunConfig {
  std::uint64_t seed = 1234;
  ModelConfig model;
  LossWeights weights;
  std::vector<dsp::StftParams> stft_resolutions = {{1024, 120, 600}, {2048, 240, 1200}, {512, 50, 240}};
  OptimizerConfig optimizer;
  TrainingConfig training;
  AdapterDefaults adapters;
  std::string plan = "paper_default";
  std::string model_kind = "auto";  // auto: vocoder for speaker tasks, both for language tasks
  std::string train_manifest;
  std::string task = "backbone";  // backbone | finetune_language | finetune_speaker
  std::string mode = "adapters";  // full | adapters

  std::vector<std::string> violations() const;
};

nlohmann::json default_config_json();
nlohmann::json to_json(const RunConfig& c);
// Applies `j` over the defaults; throws "config-invalid" listing every problem.
RunConfig run_config_from_json(const nlohmann::json& j);
// Relative paths in the file (train_manifest) resolve against its directory.
RunConfig load_run_config(const std::filesystem::path& path);

// Directory consulted for bare config names; TTSA_CONFIG_DIR overrides "configs".
std::filesystem::path default_config_dir();
std::filesystem::path resolve_config_path(const std::string& arg);

}  // namespace ttsa
