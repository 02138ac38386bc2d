// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include "ttsa/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ttsa/error.hpp"

namespace ttsa {

using nlohmann::json;

std::vector<std::string> RunConfig::violations() const {
  std::vector<std::string> v = model.violations();
  for (auto& s : weights.violations()) v.push_back(s);
  for (auto& s : optimizer.violations()) v.push_back(s);
  if (stft_resolutions.empty()) v.push_back("losses.stft_resolutions must not be empty");
  for (const auto& r : stft_resolutions)
    if (r.n_fft < 2 || r.hop < 1 || r.win < 1 || r.win > r.n_fft)
      v.push_back("losses.stft_resolutions entries need n_fft >= win >= 1 and hop >= 1");
  const auto& t = training;
  if (t.steps < 0) v.push_back("training.steps must be >= 0");
  if (t.batch_size < 1) v.push_back("training.batch_size must be >= 1");
  if (t.grad_accumulation < 1) v.push_back("training.grad_accumulation must be >= 1");
  if (t.segment_frames < 1) v.push_back("training.segment_frames must be >= 1");
  if (t.segment_frames * model.audio.hop_length < model.discriminator.min_length())
    v.push_back("training.segment_frames * audio.hop_length must be >= the discriminator minimum length (" +
                std::to_string(model.discriminator.min_length()) + " samples)");
  if (t.log_every < 1) v.push_back("training.log_every must be >= 1");
  if (t.checkpoint_every < 0) v.push_back("training.checkpoint_every must be >= 0");
  if (t.finetune_epochs < 0) v.push_back("training.finetune_epochs must be >= 0");
  if (t.steps_per_epoch < 0) v.push_back("training.steps_per_epoch must be >= 0");
  if (!(t.lr_backbone > 0.0) || !(t.lr_full > 0.0) || !(t.lr_adapters > 0.0))
    v.push_back("training learning rates must be > 0");
  if (adapters.bottleneck_dim < 1) v.push_back("adapters.bottleneck_dim must be >= 1");
  if (adapters.se_ratio < 1) v.push_back("adapters.se_ratio must be >= 1");
  for (int k : adapters.conv_kernels)
    if (k < 1 || k % 2 == 0) v.push_back("adapters.conv_kernels entries must be odd");
  if (plan != "paper_default" && plan != "vocoder_reduced" && plan != "full_model")
    v.push_back("adapters.plan must be paper_default, vocoder_reduced or full_model");
  if (model_kind != "auto" && model_kind != "acoustic" && model_kind != "vocoder" && model_kind != "both")
    v.push_back("adapters.model_kind must be auto, acoustic, vocoder or both");
  if (task != "backbone" && task != "finetune_language" && task != "finetune_speaker")
    v.push_back("task must be backbone, finetune_language or finetune_speaker");
  if (mode != "full" && mode != "adapters") v.push_back("mode must be full or adapters");
  return v;
}

namespace {

json stft_list(const std::vector<dsp::StftParams>& rs) {
  json a = json::array();
  for (const auto& r : rs) a.push_back({r.n_fft, r.hop, r.win});
  return a;
}

}  // namespace

json to_json(const RunConfig& c) {
  const auto& a = c.model.audio;
  const auto& ac = c.model.acoustic;
  const auto& vc = c.model.vocoder;
  const auto& dc = c.model.discriminator;
  json j;
  j["seed"] = c.seed;
  j["task"] = c.task;
  j["mode"] = c.mode;
  j["data"] = {{"train_manifest", c.train_manifest}};
  j["audio"] = {{"sample_rate", a.sample_rate}, {"hop_length", a.hop_length}, {"win_length", a.win_length},
                {"n_fft", a.n_fft},             {"mel_bins", a.mel_bins},     {"fmin", a.fmin},
                {"fmax", a.fmax}};
  j["acoustic"] = {{"phoneme_vocab_size", ac.phoneme_vocab_size},
                   {"embed_dim", ac.embed_dim},
                   {"hidden_dim", ac.hidden_dim},
                   {"encoder_kernels", ac.encoder_kernels},
                   {"decoder_kernels", ac.decoder_kernels},
                   {"convs_per_layer", ac.convs_per_layer},
                   {"predictor_convs", ac.predictor_convs},
                   {"predictor_kernel", ac.predictor_kernel},
                   {"n_speakers", ac.n_speakers},
                   {"n_languages", ac.n_languages},
                   {"pitch_bins", ac.pitch_bins}};
  j["vocoder"] = {{"in_channels", vc.in_channels},
                  {"pre_channels", vc.pre_channels},
                  {"pre_kernel", vc.pre_kernel},
                  {"upsample_factors", vc.upsample_factors},
                  {"stage_channels", vc.stage_channels},
                  {"residual_blocks_per_stage", vc.residual_blocks_per_stage},
                  {"dilations", vc.dilations},
                  {"post_kernel", vc.post_kernel},
                  {"sub_bands", vc.sub_bands},
                  {"leaky_slope", vc.leaky_slope}};
  j["discriminator"] = {{"mpd_periods", dc.mpd_periods},
                        {"mpd_channels", dc.mpd_channels},
                        {"mrd_resolutions", stft_list(dc.mrd_resolutions)},
                        {"mrd_channels", dc.mrd_channels},
                        {"mrd_layers", dc.mrd_layers},
                        {"leaky_slope", dc.leaky_slope}};
  j["losses"] = {{"lambda_fm", c.weights.fm},
                 {"lambda_mel", c.weights.mel},
                 {"lambda_stft", c.weights.stft},
                 {"stft_resolutions", stft_list(c.stft_resolutions)}};
  j["optimizer"] = {{"beta1", c.optimizer.beta1},
                    {"beta2", c.optimizer.beta2},
                    {"eps", c.optimizer.eps},
                    {"weight_decay", c.optimizer.weight_decay},
                    {"gamma", c.optimizer.gamma}};
  const auto& t = c.training;
  j["training"] = {{"steps", t.steps},
                   {"batch_size", t.batch_size},
                   {"grad_accumulation", t.grad_accumulation},
                   {"segment_frames", t.segment_frames},
                   {"log_every", t.log_every},
                   {"checkpoint_every", t.checkpoint_every},
                   {"finetune_epochs", t.finetune_epochs},
                   {"steps_per_epoch", t.steps_per_epoch},
                   {"lr_backbone", t.lr_backbone},
                   {"lr_full", t.lr_full},
                   {"lr_adapters", t.lr_adapters}};
  j["adapters"] = {{"bottleneck_dim", c.adapters.bottleneck_dim},
                   {"conv_kernels", c.adapters.conv_kernels},
                   {"conv_layer_norm", c.adapters.conv_layer_norm},
                   {"se_ratio", c.adapters.se_ratio},
                   {"plan", c.plan},
                   {"model_kind", c.model_kind}};
  return j;
}

json default_config_json() { return to_json(RunConfig{}); }

namespace {

void check_keys(const json& user, const json& defaults, const std::string& path, std::vector<std::string>& errs) {
  if (!user.is_object()) {
    errs.push_back((path.empty() ? std::string("config") : path) + " must be an object");
    return;
  }
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string p = path.empty() ? it.key() : path + "." + it.key();
    if (!defaults.contains(it.key())) {
      errs.push_back("unknown key '" + p + "'");
      continue;
    }
    const json& d = defaults[it.key()];
    if (d.is_object()) check_keys(it.value(), d, p, errs);
  }
}

void merge(json& base, const json& over) {
  for (auto it = over.begin(); it != over.end(); ++it) {
    if (base.contains(it.key()) && base[it.key()].is_object() && it.value().is_object())
      merge(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
}

class Reader {
 public:
  explicit Reader(const json& root) : root_(root) {}

  template <typename T>
  void get(const char* section, const char* key, T& out) {
    const std::string p = std::string(section) + (section[0] ? "." : "") + key;
    try {
      const json& node = section[0] ? root_.at(section).at(key) : root_.at(key);
      out = node.get<T>();
    } catch (const json::exception&) {
      errors.push_back(p + " has the wrong type");
    }
  }

  void stft(const char* section, const char* key, std::vector<dsp::StftParams>& out) {
    std::vector<std::vector<int>> raw;
    get(section, key, raw);
    out.clear();
    for (const auto& r : raw) {
      if (r.size() != 3) {
        errors.push_back(std::string(section) + "." + key + " entries must be [n_fft, hop, win]");
        continue;
      }
      out.push_back({r[0], r[1], r[2]});
    }
  }

  std::vector<std::string> errors;

 private:
  const json& root_;
};

}  // namespace

RunConfig run_config_from_json(const json& user) {
  std::vector<std::string> errs;
  const json defaults = default_config_json();
  check_keys(user, defaults, "", errs);
  if (!errs.empty() && !user.is_object()) fail("config-invalid", errs.front());
  json j = defaults;
  merge(j, user);

  RunConfig c;
  Reader r(j);
  r.get("", "seed", c.seed);
  r.get("", "task", c.task);
  r.get("", "mode", c.mode);
  r.get("data", "train_manifest", c.train_manifest);
  auto& a = c.model.audio;
  r.get("audio", "sample_rate", a.sample_rate);
  r.get("audio", "hop_length", a.hop_length);
  r.get("audio", "win_length", a.win_length);
  r.get("audio", "n_fft", a.n_fft);
  r.get("audio", "mel_bins", a.mel_bins);
  r.get("audio", "fmin", a.fmin);
  r.get("audio", "fmax", a.fmax);
  auto& ac = c.model.acoustic;
  r.get("acoustic", "phoneme_vocab_size", ac.phoneme_vocab_size);
  r.get("acoustic", "embed_dim", ac.embed_dim);
  r.get("acoustic", "hidden_dim", ac.hidden_dim);
  r.get("acoustic", "encoder_kernels", ac.encoder_kernels);
  r.get("acoustic", "decoder_kernels", ac.decoder_kernels);
  r.get("acoustic", "convs_per_layer", ac.convs_per_layer);
  r.get("acoustic", "predictor_convs", ac.predictor_convs);
  r.get("acoustic", "predictor_kernel", ac.predictor_kernel);
  r.get("acoustic", "n_speakers", ac.n_speakers);
  r.get("acoustic", "n_languages", ac.n_languages);
  r.get("acoustic", "pitch_bins", ac.pitch_bins);
  auto& vc = c.model.vocoder;
  r.get("vocoder", "in_channels", vc.in_channels);
  r.get("vocoder", "pre_channels", vc.pre_channels);
  r.get("vocoder", "pre_kernel", vc.pre_kernel);
  r.get("vocoder", "upsample_factors", vc.upsample_factors);
  r.get("vocoder", "stage_channels", vc.stage_channels);
  r.get("vocoder", "residual_blocks_per_stage", vc.residual_blocks_per_stage);
  r.get("vocoder", "dilations", vc.dilations);
  r.get("vocoder", "post_kernel", vc.post_kernel);
  r.get("vocoder", "sub_bands", vc.sub_bands);
  r.get("vocoder", "leaky_slope", vc.leaky_slope);
  auto& dc = c.model.discriminator;
  r.get("discriminator", "mpd_periods", dc.mpd_periods);
  r.get("discriminator", "mpd_channels", dc.mpd_channels);
  r.stft("discriminator", "mrd_resolutions", dc.mrd_resolutions);
  r.get("discriminator", "mrd_channels", dc.mrd_channels);
  r.get("discriminator", "mrd_layers", dc.mrd_layers);
  r.get("discriminator", "leaky_slope", dc.leaky_slope);
  r.get("losses", "lambda_fm", c.weights.fm);
  r.get("losses", "lambda_mel", c.weights.mel);
  r.get("losses", "lambda_stft", c.weights.stft);
  r.stft("losses", "stft_resolutions", c.stft_resolutions);
  r.get("optimizer", "beta1", c.optimizer.beta1);
  r.get("optimizer", "beta2", c.optimizer.beta2);
  r.get("optimizer", "eps", c.optimizer.eps);
  r.get("optimizer", "weight_decay", c.optimizer.weight_decay);
  r.get("optimizer", "gamma", c.optimizer.gamma);
  auto& t = c.training;
  r.get("training", "steps", t.steps);
  r.get("training", "batch_size", t.batch_size);
  r.get("training", "grad_accumulation", t.grad_accumulation);
  r.get("training", "segment_frames", t.segment_frames);
  r.get("training", "log_every", t.log_every);
  r.get("training", "checkpoint_every", t.checkpoint_every);
  r.get("training", "finetune_epochs", t.finetune_epochs);
  r.get("training", "steps_per_epoch", t.steps_per_epoch);
  r.get("training", "lr_backbone", t.lr_backbone);
  r.get("training", "lr_full", t.lr_full);
  r.get("training", "lr_adapters", t.lr_adapters);
  r.get("adapters", "bottleneck_dim", c.adapters.bottleneck_dim);
  r.get("adapters", "conv_kernels", c.adapters.conv_kernels);
  r.get("adapters", "conv_layer_norm", c.adapters.conv_layer_norm);
  r.get("adapters", "se_ratio", c.adapters.se_ratio);
  r.get("adapters", "plan", c.plan);
  r.get("adapters", "model_kind", c.model_kind);

  for (auto& e : r.errors) errs.push_back(e);
  if (errs.empty())
    for (auto& e : c.violations()) errs.push_back(e);
  if (!errs.empty()) {
    std::string msg = std::to_string(errs.size()) + " problem(s): ";
    for (std::size_t i = 0; i < errs.size(); ++i) msg += (i ? "; " : "") + errs[i];
    fail("config-invalid", msg);
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(std::filesystem::is_regular_file(path) && in.good(), "config-not-found",
          "config file " + path.string() + " not found");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail("config-invalid", path.string() + ": " + e.what());
  }
  RunConfig c = run_config_from_json(j);
  if (!c.train_manifest.empty()) {
    std::filesystem::path m(c.train_manifest);
    if (m.is_relative()) c.train_manifest = (path.parent_path() / m).lexically_normal().string();
  }
  return c;
}

std::filesystem::path default_config_dir() {
  if (const char* env = std::getenv("TTSA_CONFIG_DIR"); env && *env) return env;
  return "configs";
}

std::filesystem::path resolve_config_path(const std::string& arg) {
  std::filesystem::path p(arg);
  if (std::filesystem::exists(p) || p.has_parent_path()) return p;
  std::filesystem::path in_dir = default_config_dir() / p;
  if (std::filesystem::exists(in_dir)) return in_dir;
  if (!p.has_extension() && std::filesystem::exists(in_dir.string() + ".json")) return in_dir.string() + ".json";
  return p;
}

}  // namespace ttsa
