// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

// Adapter placement plans, injection, freezing and parameter accounting.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "ttsa/adapter_blocks.hpp"
#include "ttsa/model.hpp"

namespace ttsa {

enum class ModelKind { acoustic, vocoder, both };
enum class PlanVariant { paper_default, vocoder_reduced, full_model };

ModelKind parse_model_kind(const std::string& s);
PlanVariant parse_plan_variant(const std::string& s);
std::string to_string(ModelKind k);
std::string to_string(PlanVariant v);

struct PlacementEntry {
  std::string point;  // fully qualified attachment path
  AdapterSpec spec;
  bool operator==(const PlacementEntry&) const = default;
};

struct AdapterPlacementPlan {
  std::vector<PlacementEntry> entries;

  std::size_t parameter_count() const;
  // Entries whose point starts with "acoustic." / "vocoder.".
  std::size_t parameter_count(const std::string& point_prefix) const;
  void validate() const;  // no duplicate points
  bool operator==(const AdapterPlacementPlan&) const = default;
};

struct AdapterDefaults {
  int bottleneck_dim = 16;
  std::array<int, 3> conv_kernels = {3, 5, 3};
  bool conv_layer_norm = true;
  int se_ratio = 4;
};

// Acoustic: a bottleneck adapter after every separable conv. Vocoder: a conv
// adapter after every upsampler and residual block (paper_default) or after
// the upsamplers only (vocoder_reduced). full_model covers both networks.
AdapterPlacementPlan build_placement_plan(const ModelConfig& config, ModelKind kind, PlanVariant variant,
                                          const AdapterDefaults& defaults = {});

// Attaches identity-initialized adapters. Throws "unknown-attachment-point",
// "double-injection" or "shape-mismatch".
void inject(TtsModel& model, const AdapterPlacementPlan& plan, std::uint64_t seed);

// Reconstructs the plan currently attached to a model.
AdapterPlacementPlan current_plan(TtsModel& model);

nlohmann::json plan_to_json(const AdapterPlacementPlan& plan);
AdapterPlacementPlan plan_from_json(const nlohmann::json& j);

struct FreezeSpec {
  std::vector<std::string> trainable_patterns;  // fnmatch-style, matched against full parameter names
};

// Adapters plus the conditioning tables (the forked copy when present).
FreezeSpec adapter_freeze_spec();

struct FreezeCounts {
  std::size_t frozen = 0;
  std::size_t trainable = 0;
  double ratio = 0.0;  // trainable / backbone parameter count
};

// Sets requires_grad from the patterns. Every pattern must match at least
// one parameter ("freeze-pattern-unmatched").
FreezeCounts apply_freeze(TtsModel& model, const FreezeSpec& spec);
FreezeCounts count_parameters(TtsModel& model, const FreezeSpec& spec);
bool matches_any(const std::string& name, const std::vector<std::string>& patterns);

}  // namespace ttsa
