// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include "ttsa/adapters.hpp"

#include <fnmatch.h>

#include <set>

#include "ttsa/error.hpp"

namespace ttsa {

ModelKind parse_model_kind(const std::string& s) {
  if (s == "acoustic") return ModelKind::acoustic;
  if (s == "vocoder") return ModelKind::vocoder;
  if (s == "both") return ModelKind::both;
  fail("invalid-argument", "unknown model kind '" + s + "' (expected acoustic, vocoder or both)");
}

PlanVariant parse_plan_variant(const std::string& s) {
  if (s == "paper_default") return PlanVariant::paper_default;
  if (s == "vocoder_reduced") return PlanVariant::vocoder_reduced;
  if (s == "full_model") return PlanVariant::full_model;
  fail("invalid-argument", "unknown plan '" + s + "' (expected paper_default, vocoder_reduced or full_model)");
}

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::acoustic: return "acoustic";
    case ModelKind::vocoder: return "vocoder";
    default: return "both";
  }
}

std::string to_string(PlanVariant v) {
  switch (v) {
    case PlanVariant::paper_default: return "paper_default";
    case PlanVariant::vocoder_reduced: return "vocoder_reduced";
    default: return "full_model";
  }
}

std::size_t AdapterPlacementPlan::parameter_count() const { return parameter_count(""); }

std::size_t AdapterPlacementPlan::parameter_count(const std::string& point_prefix) const {
  std::size_t n = 0;
  for (const auto& e : entries)
    if (e.point.rfind(point_prefix, 0) == 0) n += adapter_parameter_count(e.spec);
  return n;
}

void AdapterPlacementPlan::validate() const {
  std::set<std::string> seen;
  for (const auto& e : entries)
    require(seen.insert(e.point).second, "double-injection", "plan lists attachment point '" + e.point + "' twice");
}

AdapterPlacementPlan build_placement_plan(const ModelConfig& config, ModelKind kind, PlanVariant variant,
                                          const AdapterDefaults& d) {
  if (variant == PlanVariant::full_model) kind = ModelKind::both;
  AdapterPlacementPlan plan;
  if (kind != ModelKind::vocoder) {
    const auto& a = config.acoustic;
    const BottleneckAdapterSpec spec{a.hidden_dim, d.bottleneck_dim};
    auto add = [&plan, &spec](const std::string& base, int convs) {
      for (int j = 0; j < convs; ++j) plan.entries.push_back({base + ".convs." + std::to_string(j), spec});
    };
    for (int l = 0; l < a.encoder_layers(); ++l) add("acoustic.encoder.layers." + std::to_string(l), a.convs_per_layer);
    for (int l = 0; l < a.decoder_layers(); ++l) add("acoustic.decoder.layers." + std::to_string(l), a.convs_per_layer);
    add("acoustic.duration_predictor", a.predictor_convs);
    add("acoustic.pitch_predictor", a.predictor_convs);
  }
  if (kind != ModelKind::acoustic) {
    const auto& v = config.vocoder;
    for (std::size_t s = 0; s < v.stage_channels.size(); ++s) {
      const ConvAdapterSpec spec{v.stage_channels[s], d.conv_kernels, d.conv_layer_norm, d.se_ratio};
      const std::string base = "vocoder.stages." + std::to_string(s);
      plan.entries.push_back({base + ".upsample", spec});
      if (variant == PlanVariant::vocoder_reduced) continue;
      for (int r = 0; r < v.residual_blocks_per_stage; ++r)
        plan.entries.push_back({base + ".resblocks." + std::to_string(r), spec});
    }
  }
  return plan;
}

void inject(TtsModel& model, const AdapterPlacementPlan& plan, std::uint64_t seed) {
  plan.validate();
  auto points = model.attachment_points();
  for (const auto& e : plan.entries) {
    auto it = points.find(e.point);
    require(it != points.end(), "unknown-attachment-point", "model has no attachment point '" + e.point + "'");
    require(!it->second->slot().occupied(), "double-injection", "an adapter is already attached at '" + e.point + "'");
    require(adapter_channels(e.spec) == it->second->output_channels(), "shape-mismatch",
            "adapter at '" + e.point + "' has " + std::to_string(adapter_channels(e.spec)) + " channels, host has " +
                std::to_string(it->second->output_channels()));
  }
  for (const auto& e : plan.entries) {
    Rng rng = Rng::derive(seed, {stable_hash(e.point)});
    points.at(e.point)->slot().attach(make_adapter(e.spec, rng));
  }
}

AdapterPlacementPlan current_plan(TtsModel& model) {
  AdapterPlacementPlan plan;
  for (auto& [name, host] : model.attachment_points())
    if (host->slot().occupied()) plan.entries.push_back({name, host->slot().get()->spec()});
  return plan;
}

nlohmann::json plan_to_json(const AdapterPlacementPlan& plan) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : plan.entries) {
    nlohmann::json j;
    j["point"] = e.point;
    if (const auto* b = std::get_if<BottleneckAdapterSpec>(&e.spec)) {
      j["type"] = "bottleneck";
      j["input_dim"] = b->input_dim;
      j["bottleneck_dim"] = b->bottleneck_dim;
    } else {
      const auto& c = std::get<ConvAdapterSpec>(e.spec);
      j["type"] = "conv";
      j["channels"] = c.channels;
      j["kernel_sizes"] = c.kernel_sizes;
      j["layer_norm"] = c.layer_norm;
      j["se_ratio"] = c.se_ratio;
    }
    arr.push_back(j);
  }
  return arr;
}

AdapterPlacementPlan plan_from_json(const nlohmann::json& j) {
  AdapterPlacementPlan plan;
  try {
    for (const auto& e : j) {
      const std::string type = e.at("type").get<std::string>();
      if (type == "bottleneck") {
        plan.entries.push_back(
            {e.at("point").get<std::string>(),
             BottleneckAdapterSpec{e.at("input_dim").get<int>(), e.at("bottleneck_dim").get<int>()}});
      } else if (type == "conv") {
        ConvAdapterSpec c;
        c.channels = e.at("channels").get<int>();
        c.kernel_sizes = e.at("kernel_sizes").get<std::array<int, 3>>();
        c.layer_norm = e.at("layer_norm").get<bool>();
        c.se_ratio = e.at("se_ratio").get<int>();
        plan.entries.push_back({e.at("point").get<std::string>(), c});
      } else {
        fail("config-invalid", "unknown adapter type '" + type + "'");
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    fail("config-invalid", std::string("malformed adapter plan: ") + ex.what());
  }
  plan.validate();
  return plan;
}

FreezeSpec adapter_freeze_spec() { return {{"*.adapter.*", "conditioning.*"}}; }

bool matches_any(const std::string& name, const std::vector<std::string>& patterns) {
  for (const auto& p : patterns)
    if (fnmatch(p.c_str(), name.c_str(), 0) == 0) return true;
  return false;
}

namespace {

FreezeCounts census(TtsModel& model) {
  FreezeCounts c;
  model.visit("", [&c](const std::string&, Parameter& p) { (p.requires_grad ? c.trainable : c.frozen) += p.value.numel(); });
  c.ratio = static_cast<double>(c.trainable) / static_cast<double>(model.backbone_parameter_count());
  return c;
}

}  // namespace

FreezeCounts apply_freeze(TtsModel& model, const FreezeSpec& spec) {
  std::vector<int> hits(spec.trainable_patterns.size(), 0);
  model.visit("", [&](const std::string& name, Parameter& p) {
    bool trainable = false;
    for (std::size_t i = 0; i < spec.trainable_patterns.size(); ++i)
      if (fnmatch(spec.trainable_patterns[i].c_str(), name.c_str(), 0) == 0) {
        trainable = true;
        ++hits[i];
      }
    p.requires_grad = trainable;
  });
  for (std::size_t i = 0; i < hits.size(); ++i)
    require(hits[i] > 0, "freeze-pattern-unmatched",
            "trainable pattern '" + spec.trainable_patterns[i] + "' matches no parameter");
  return census(model);
}

FreezeCounts count_parameters(TtsModel& model, const FreezeSpec& spec) {
  FreezeCounts c;
  model.visit("", [&](const std::string& name, Parameter& p) {
    (matches_any(name, spec.trainable_patterns) ? c.trainable : c.frozen) += p.value.numel();
  });
  c.ratio = static_cast<double>(c.trainable) / static_cast<double>(model.backbone_parameter_count());
  return c;
}

}  // namespace ttsa
