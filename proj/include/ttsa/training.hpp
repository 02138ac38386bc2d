// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

// Backbone pre-training and the adapter / full fine-tuning workflows.
//
// Each optimizer step runs the generator once per utterance, updates the
// discriminators on the detached generator output, then updates the
// generator against the refreshed discriminators. All randomness (batch
// draws, vocoder segments) derives from (seed, step), so resuming from a
// checkpoint reproduces an uninterrupted run exactly.

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ttsa/adapters.hpp"
#include "ttsa/checkpoint.hpp"
#include "ttsa/config.hpp"
#include "ttsa/dataio.hpp"
#include "ttsa/discriminator.hpp"
#include "ttsa/losses.hpp"
#include "ttsa/model.hpp"
#include "ttsa/optimizer.hpp"

namespace ttsa {

struct TrainState {
  RunConfig config;
  std::unique_ptr<TtsModel> generator;
  std::unique_ptr<DiscriminatorSet> discriminators;
  AdamW opt_g;
  AdamW opt_d;
  std::int64_t step = 0;
  std::string phase = "backbone";  // backbone | finetune
  bool adapters_frozen = false;    // adapter-mode freeze applied
  nlohmann::json finetune_info = nlohmann::json::object();
};

// Fresh models; vocabularies and table sizes come from the manifest.
TrainState init_state(const RunConfig& config, const Manifest& manifest);

Checkpoint to_checkpoint(TrainState& state);
TrainState state_from_checkpoint(const Checkpoint& ckpt);
void save_state(const std::filesystem::path& path, TrainState& state);
TrainState load_state(const std::filesystem::path& path);

// Line-delimited "step<TAB>name<TAB>value" records with round-trip precision.
class MetricsLog {
 public:
  MetricsLog() = default;
  MetricsLog(const std::filesystem::path& path, bool append);
  ~MetricsLog();
  MetricsLog(const MetricsLog&) = delete;
  MetricsLog& operator=(const MetricsLog&) = delete;

  void write(std::int64_t step, const std::string& name, double value);
  void write(std::int64_t step, const LossReport& report);

 private:
  std::FILE* file_ = nullptr;
};

struct StepInputs {
  std::vector<const Utterance*> batch;
  double lr_g = 0.0;
  double lr_d = 0.0;
  std::uint64_t seed = 0;  // segment positions
};

// One discriminator update followed by one generator update over the batch.
LossReport train_step(TrainState& state, const StepInputs& in);

struct TrainOptions {
  std::filesystem::path run_dir;  // metrics.log and checkpoint.ckpt; empty: nothing written
  std::int64_t until_step = -1;   // -1: config.training.steps
  std::function<void(std::int64_t, const LossReport&)> on_step;
};

// Runs (or resumes) backbone training up to the target step.
void train_backbone(TrainState& state, const std::vector<Utterance>& data, const TrainOptions& opts);
// Loads config.train_manifest and trains from scratch.
TrainState train_backbone(const RunConfig& config, const TrainOptions& opts);

enum class FinetuneTask { language, speaker };
enum class FinetuneMode { full, adapters };

FinetuneTask parse_task(const std::string& s);
FinetuneMode parse_mode(const std::string& s);
// Default adapter scope: vocoder for speaker adaptation, both networks for
// language adaptation.
ModelKind default_model_kind(FinetuneTask task);

struct FinetuneOptions {
  FinetuneTask task = FinetuneTask::speaker;
  FinetuneMode mode = FinetuneMode::adapters;
  PlanVariant plan = PlanVariant::paper_default;
  ModelKind model_kind = ModelKind::vocoder;
  int epochs = -1;           // -1: config.training.finetune_epochs
  int steps_per_epoch = -1;  // -1: config.training.steps_per_epoch (0 = one pass)
  std::filesystem::path run_dir;
  std::function<void(std::int64_t, const LossReport&)> on_step;
};

struct FinetuneResult {
  std::vector<double> epoch_totals;  // mean total loss per epoch
  FreezeCounts counts;
};

// Prepares the model for the task (new ids, adapters, freeze) without training.
std::vector<Utterance> prepare_finetune(TrainState& state, const Manifest& manifest, const FinetuneOptions& opts);
FinetuneResult finetune(TrainState& state, const Manifest& manifest, const FinetuneOptions& opts);

// FNV-1a hash of every parameter value, keyed by name.
std::map<std::string, std::uint64_t> parameter_checksums(Module& m);

}  // namespace ttsa
