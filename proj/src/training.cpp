// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include "ttsa/training.hpp"

#include <cinttypes>
#include <cstring>
#include <numeric>

#include "ttsa/error.hpp"

namespace ttsa {

namespace {

constexpr std::uint64_t kBatchTag = 0xba7c;
constexpr std::uint64_t kSegmentTag = 0x5e9;
constexpr std::uint64_t kEpochTag = 0xe90c;
constexpr std::uint64_t kDiscriminatorSeedTag = 3;
constexpr std::uint64_t kAdapterSeedTag = 4;

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
  return s;
}

NamedParameters params_of(Module& m) { return named_parameters(m, ""); }

}  // namespace

TrainState init_state(const RunConfig& config, const Manifest& manifest) {
  require(!manifest.entries.empty(), "manifest-invalid", "training manifest has no entries");
  TrainState s;
  s.config = config;
  s.config.model.acoustic.n_speakers = static_cast<int>(manifest.speakers.size());
  s.config.model.acoustic.n_languages = static_cast<int>(manifest.languages.size());
  s.generator = std::make_unique<TtsModel>(s.config.model, config.seed);
  s.generator->vocab.speakers = manifest.speakers;
  s.generator->vocab.languages = manifest.languages;
  s.generator->register_phonemes(manifest.phonemes);
  Rng drng = Rng::derive(config.seed, {kDiscriminatorSeedTag});
  s.discriminators = std::make_unique<DiscriminatorSet>(s.config.model.discriminator, drng);
  s.opt_g = AdamW(config.optimizer);
  s.opt_d = AdamW(config.optimizer);
  return s;
}

// ---- checkpoints ---------------------------------------------------------

Checkpoint to_checkpoint(TrainState& s) {
  Checkpoint c;
  auto& g = *s.generator;
  c.meta["format"] = "ttsa-checkpoint";
  c.meta["config"] = to_json(s.config);
  c.meta["vocab"] = {{"phonemes", g.vocab.phonemes}, {"speakers", g.vocab.speakers}, {"languages", g.vocab.languages}};
  c.meta["plan"] = plan_to_json(current_plan(g));
  c.meta["conditioning_fork"] = g.has_conditioning_fork();
  c.meta["adapters_frozen"] = s.adapters_frozen;
  c.meta["step"] = s.step;
  c.meta["phase"] = s.phase;
  c.meta["finetune"] = s.finetune_info;
  c.meta["opt_g_steps"] = s.opt_g.steps();
  c.meta["opt_d_steps"] = s.opt_d.steps();
  g.visit("G", [&c](const std::string& name, Parameter& p) { c.arrays.emplace_back(name, p.value); });
  s.discriminators->visit("D", [&c](const std::string& name, Parameter& p) { c.arrays.emplace_back(name, p.value); });
  s.opt_g.export_state("optG.", c.arrays);
  s.opt_d.export_state("optD.", c.arrays);
  return c;
}

TrainState state_from_checkpoint(const Checkpoint& c) {
  TrainState s;
  try {
    require(c.meta.at("format") == "ttsa-checkpoint", "checkpoint-format", "not a ttsa checkpoint");
    s.config = run_config_from_json(c.meta.at("config"));
    s.generator = std::make_unique<TtsModel>(s.config.model, s.config.seed);
    auto& g = *s.generator;
    g.vocab.phonemes = c.meta.at("vocab").at("phonemes").get<std::vector<std::string>>();
    g.vocab.speakers = c.meta.at("vocab").at("speakers").get<std::vector<std::string>>();
    g.vocab.languages = c.meta.at("vocab").at("languages").get<std::vector<std::string>>();
    if (c.meta.at("conditioning_fork").get<bool>()) g.fork_conditioning();
    inject(g, plan_from_json(c.meta.at("plan")), 0);
    Rng drng = Rng::derive(s.config.seed, {kDiscriminatorSeedTag});
    s.discriminators = std::make_unique<DiscriminatorSet>(s.config.model.discriminator, drng);
    s.step = c.meta.at("step").get<std::int64_t>();
    s.phase = c.meta.at("phase").get<std::string>();
    s.finetune_info = c.meta.at("finetune");
    s.adapters_frozen = c.meta.at("adapters_frozen").get<bool>();
    const auto idx = c.index();
    std::size_t used = 0;
    auto load = [&idx, &used](const std::string& name, Parameter& p) {
      auto it = idx.find(name);
      require(it != idx.end(), "checkpoint-format", "checkpoint lacks parameter " + name);
      const Tensor& t = *it->second;
      // Embedding tables may have grown by appended ids.
      require(t.shape() == p.value.shape() || (p.row_sparse && t.rank() == 2 && t.dim(1) == p.value.dim(1)),
              "checkpoint-format",
              "parameter " + name + " has shape " + shape_str(t.shape()) + ", model expects " + shape_str(p.value.shape()));
      p.value = t;
      ++used;
    };
    g.visit("G", load);
    s.discriminators->visit("D", load);
    s.opt_g = AdamW(s.config.optimizer);
    s.opt_d = AdamW(s.config.optimizer);
    s.opt_g.import_state("optG.", idx, c.meta.at("opt_g_steps").get<std::int64_t>());
    s.opt_d.import_state("optD.", idx, c.meta.at("opt_d_steps").get<std::int64_t>());
    for (const auto& [name, t] : c.arrays)
      if (name.rfind("optG.", 0) == 0 || name.rfind("optD.", 0) == 0) ++used;
    require(used == c.arrays.size(), "checkpoint-format", "checkpoint holds arrays the model does not use");
    if (s.adapters_frozen) apply_freeze(g, adapter_freeze_spec());
  } catch (const nlohmann::json::exception& e) {
    fail("checkpoint-format", std::string("malformed checkpoint metadata: ") + e.what());
  }
  return s;
}

void save_state(const std::filesystem::path& path, TrainState& state) { save_checkpoint(path, to_checkpoint(state)); }

TrainState load_state(const std::filesystem::path& path) { return state_from_checkpoint(load_checkpoint(path)); }

// ---- metrics -------------------------------------------------------------

MetricsLog::MetricsLog(const std::filesystem::path& path, bool append) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  file_ = std::fopen(path.c_str(), append ? "a" : "w");
  require(file_ != nullptr, "io", "cannot open metrics log " + path.string());
}

MetricsLog::~MetricsLog() {
  if (file_) std::fclose(file_);
}

void MetricsLog::write(std::int64_t step, const std::string& name, double value) {
  if (!file_) return;
  std::fprintf(file_, "%" PRId64 "\t%s\t%.17g\n", step, name.c_str(), value);
  std::fflush(file_);
}

void MetricsLog::write(std::int64_t step, const LossReport& report) {
  for (const auto& [name, v] : report.items()) write(step, name, v);
}

// ---- one step ------------------------------------------------------------

LossReport train_step(TrainState& s, const StepInputs& in) {
  require(!in.batch.empty(), "invalid-argument", "empty batch");
  auto& g = *s.generator;
  auto& d = *s.discriminators;
  const auto& cfg = s.config;
  const int hop = cfg.model.audio.hop_length;
  const double inv_b = 1.0 / static_cast<double>(in.batch.size());
  const NamedParameters gp = params_of(g), dp = params_of(d);
  zero_grads(gp);
  zero_grads(dp);

  struct Item {
    std::unique_ptr<Tape> tape;
    ag::Var dur, f0, x_hat, x;
  };
  std::vector<Item> items;
  Rng seg_rng = Rng::derive(in.seed, {kSegmentTag});
  for (const Utterance* u : in.batch) {
    Item it;
    it.tape = std::make_unique<Tape>();
    AcousticOutput out = g.acoustic->forward_teacher(*it.tape, u->phoneme_ids, u->speaker_id, u->language_id,
                                                     u->durations, u->pitch_bins, g.active_tables());
    it.dur = duration_loss(out.log_durations, duration_targets(u->durations));
    it.f0 = pitch_loss(out.pitch_logits, u->pitch_bins);
    const int frames = out.frames();
    const int seg = std::min(cfg.training.segment_frames, frames);
    require(seg * hop >= d.config().min_length(), "signal-too-short",
            "utterance " + u->id + " has " + std::to_string(frames) + " frames; the discriminators need " +
                std::to_string(d.config().min_length()) + " samples");
    const int start = frames > seg ? seg_rng.below(frames - seg + 1) : 0;
    it.x_hat = g.vocoder->forward(*it.tape, ag::slice_time(out.latents, start, start + seg));
    Tensor real({1, seg * hop});
    std::memcpy(real.data(), u->waveform.data() + static_cast<std::size_t>(start) * hop,
                sizeof(double) * static_cast<std::size_t>(seg) * hop);
    it.x = ag::constant(std::move(real));
    items.push_back(std::move(it));
  }

  // Discriminator update on detached generator output.
  double disc = 0.0;
  for (auto& it : items) {
    Tape td;
    auto real = d.forward(td, it.x);
    auto fake = d.forward(td, ag::detach(it.x_hat));
    ag::Var ld = discriminator_adversarial_loss(scores_of(real), scores_of(fake));
    require(std::isfinite(ld.item()), "non-finite-loss", "loss term L_D is not finite");
    disc += ld.item() * inv_b;
    ag::backward(ag::scale(ld, inv_b));
    td.accumulate();
  }
  s.opt_d.step(dp, in.lr_d);

  // Generator update; discriminator weights enter as constants.
  LossReport report;
  report.disc = disc;
  for (auto& it : items) {
    Tape tdc(false);
    auto fake = d.forward(tdc, it.x_hat);
    auto real = d.forward(tdc, it.x);
    LossParts parts;
    parts.dur = it.dur;
    parts.f0 = it.f0;
    parts.adv = generator_adversarial_loss(scores_of(fake));
    parts.fm = feature_matching_loss(features_of(real), features_of(fake));
    parts.mel = mel_loss(it.x, it.x_hat, cfg.model.audio);
    parts.stft = stft_loss(it.x, it.x_hat, cfg.stft_resolutions);
    ag::Var total = total_loss(parts, cfg.weights);
    const LossTerms v = parts.values();
    report.terms.dur += v.dur * inv_b;
    report.terms.f0 += v.f0 * inv_b;
    report.terms.adv += v.adv * inv_b;
    report.terms.fm += v.fm * inv_b;
    report.terms.mel += v.mel * inv_b;
    report.terms.stft += v.stft * inv_b;
    report.total += total.item() * inv_b;
    ag::backward(ag::scale(total, inv_b));
    it.tape->accumulate();
  }
  s.opt_g.step(gp, in.lr_g);
  return report;
}

// ---- backbone ------------------------------------------------------------

void train_backbone(TrainState& s, const std::vector<Utterance>& data, const TrainOptions& opts) {
  require(!data.empty(), "invalid-argument", "no training utterances");
  const auto& cfg = s.config;
  const std::int64_t until = opts.until_step >= 0 ? opts.until_step : cfg.training.steps;
  const int per_step = cfg.training.batch_size * cfg.training.grad_accumulation;
  const auto n = static_cast<std::int64_t>(data.size());
  std::unique_ptr<MetricsLog> log;
  if (!opts.run_dir.empty()) log = std::make_unique<MetricsLog>(opts.run_dir / "metrics.log", s.step > 0);
  while (s.step < until) {
    Rng rng = Rng::derive(cfg.seed, {kBatchTag, static_cast<std::uint64_t>(s.step)});
    StepInputs in;
    for (int i = 0; i < per_step; ++i) in.batch.push_back(&data[static_cast<std::size_t>(rng.below(static_cast<int>(n)))]);
    const int epoch = static_cast<int>(s.step * per_step / n);
    in.lr_g = in.lr_d = scheduled_lr(cfg.training.lr_backbone, cfg.optimizer.gamma, epoch);
    in.seed = rng.next_u64();
    LossReport r;
    try {
      r = train_step(s, in);
    } catch (const Error& e) {
      if (e.category() == "non-finite-loss") fail(e.category(), "step " + std::to_string(s.step) + ": " + e.what());
      throw;
    }
    ++s.step;
    if (log && s.step % cfg.training.log_every == 0) {
      log->write(s.step, r);
      log->write(s.step, "lr", in.lr_g);
    }
    if (opts.on_step) opts.on_step(s.step, r);
    if (!opts.run_dir.empty() && cfg.training.checkpoint_every > 0 && s.step % cfg.training.checkpoint_every == 0)
      save_state(opts.run_dir / "checkpoint.ckpt", s);
  }
  if (!opts.run_dir.empty()) save_state(opts.run_dir / "checkpoint.ckpt", s);
}

TrainState train_backbone(const RunConfig& config, const TrainOptions& opts) {
  require(!config.train_manifest.empty(), "config-invalid", "data.train_manifest is required for backbone training");
  const Manifest m = load_manifest(config.train_manifest, config.model.audio);
  TrainState s = init_state(config, m);
  const auto data = build_utterances(m, s.generator->vocab, config.model.audio);
  train_backbone(s, data, opts);
  return s;
}

// ---- fine-tuning ---------------------------------------------------------

FinetuneTask parse_task(const std::string& s) {
  if (s == "language" || s == "finetune_language") return FinetuneTask::language;
  if (s == "speaker" || s == "finetune_speaker") return FinetuneTask::speaker;
  fail("invalid-argument", "unknown task '" + s + "' (expected language or speaker)");
}

FinetuneMode parse_mode(const std::string& s) {
  if (s == "full") return FinetuneMode::full;
  if (s == "adapters") return FinetuneMode::adapters;
  fail("invalid-argument", "unknown mode '" + s + "' (expected full or adapters)");
}

ModelKind default_model_kind(FinetuneTask task) {
  return task == FinetuneTask::speaker ? ModelKind::vocoder : ModelKind::both;
}

std::vector<Utterance> prepare_finetune(TrainState& s, const Manifest& manifest, const FinetuneOptions& opts) {
  require(!manifest.entries.empty(), "manifest-invalid", "fine-tune manifest has no entries");
  require(s.phase == "backbone", "invalid-argument", "checkpoint is already fine-tuned; start from a backbone");
  auto& g = *s.generator;
  // The unseen dimension must be new; the other may mix known and new ids.
  std::vector<std::string> new_speakers, new_languages;
  for (const auto& spk : manifest.speakers) {
    const bool known = g.vocab.speaker_id(spk).has_value();
    if (opts.task == FinetuneTask::speaker)
      require(!known, "id-collision", "speaker '" + spk + "' already exists in the backbone; speaker adaptation needs an unseen speaker");
    if (!known) new_speakers.push_back(spk);
  }
  for (const auto& lang : manifest.languages) {
    const bool known = g.vocab.language_id(lang).has_value();
    if (opts.task == FinetuneTask::language)
      require(!known, "id-collision", "language '" + lang + "' already exists in the backbone; language adaptation needs an unseen language");
    if (!known) new_languages.push_back(lang);
  }

  FreezeCounts counts;
  if (opts.mode == FinetuneMode::adapters) {
    g.fork_conditioning();
    const auto plan = build_placement_plan(s.config.model, opts.model_kind, opts.plan, s.config.adapters);
    inject(g, plan, Rng::derive(s.config.seed, {kAdapterSeedTag}).next_u64());
  }
  for (const auto& spk : new_speakers) g.add_speaker(spk);
  for (const auto& lang : new_languages) g.add_language(lang);
  g.register_phonemes(manifest.phonemes);
  if (opts.mode == FinetuneMode::adapters) {
    apply_freeze(g, adapter_freeze_spec());
    s.adapters_frozen = true;
  }
  s.phase = "finetune";
  s.finetune_info = {{"task", opts.task == FinetuneTask::language ? "language" : "speaker"},
                     {"mode", opts.mode == FinetuneMode::full ? "full" : "adapters"},
                     {"plan", to_string(opts.plan)},
                     {"model_kind", to_string(opts.model_kind)},
                     {"new_speakers", join(new_speakers)},
                     {"new_languages", join(new_languages)}};
  s.config.task = opts.task == FinetuneTask::language ? "finetune_language" : "finetune_speaker";
  s.config.mode = opts.mode == FinetuneMode::full ? "full" : "adapters";
  s.config.plan = to_string(opts.plan);
  s.config.model_kind = to_string(opts.model_kind);
  // Fresh optimizer state for the new phase.
  s.opt_g = AdamW(s.config.optimizer);
  s.opt_d = AdamW(s.config.optimizer);
  return build_utterances(manifest, g.vocab, s.config.model.audio);
}

FinetuneResult finetune(TrainState& s, const Manifest& manifest, const FinetuneOptions& opts) {
  const auto data = prepare_finetune(s, manifest, opts);
  const auto& cfg = s.config;
  FinetuneResult result;
  result.counts = opts.mode == FinetuneMode::adapters ? count_parameters(*s.generator, adapter_freeze_spec())
                                                       : count_parameters(*s.generator, FreezeSpec{{"*"}});
  const int epochs = opts.epochs >= 0 ? opts.epochs : cfg.training.finetune_epochs;
  const int per_step = cfg.training.batch_size * cfg.training.grad_accumulation;
  const int n = static_cast<int>(data.size());
  const int one_pass = (n + per_step - 1) / per_step;
  const int spe_cfg = opts.steps_per_epoch >= 0 ? opts.steps_per_epoch : cfg.training.steps_per_epoch;
  const int steps_per_epoch = spe_cfg > 0 ? spe_cfg : one_pass;
  const double lr0 = opts.mode == FinetuneMode::full ? cfg.training.lr_full : cfg.training.lr_adapters;

  std::unique_ptr<MetricsLog> log;
  if (!opts.run_dir.empty()) log = std::make_unique<MetricsLog>(opts.run_dir / "metrics.log", false);
  std::int64_t local = 0;
  for (int e = 0; e < epochs; ++e) {
    const double lr = scheduled_lr(lr0, cfg.optimizer.gamma, e);
    Rng rng = Rng::derive(cfg.seed, {kEpochTag, static_cast<std::uint64_t>(e)});
    // Cycle through shuffled passes until the epoch's step budget is spent.
    std::vector<int> order;
    double sum = 0.0;
    for (int st = 0; st < steps_per_epoch; ++st) {
      StepInputs in;
      for (int i = 0; i < per_step; ++i) {
        if (order.empty()) {
          order.resize(static_cast<std::size_t>(n));
          std::iota(order.begin(), order.end(), 0);
          for (int k = n - 1; k > 0; --k) std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(rng.below(k + 1))]);
        }
        in.batch.push_back(&data[static_cast<std::size_t>(order.back())]);
        order.pop_back();
      }
      in.lr_g = in.lr_d = lr;
      in.seed = rng.next_u64();
      LossReport r;
      try {
        r = train_step(s, in);
      } catch (const Error& err) {
        if (err.category() == "non-finite-loss") fail(err.category(), "fine-tune step " + std::to_string(local) + ": " + err.what());
        throw;
      }
      ++local;
      ++s.step;
      sum += r.total;
      if (log && local % cfg.training.log_every == 0) {
        log->write(local, r);
        log->write(local, "lr", lr);
      }
      if (opts.on_step) opts.on_step(local, r);
    }
    const double avg = steps_per_epoch > 0 ? sum / steps_per_epoch : 0.0;
    result.epoch_totals.push_back(avg);
    if (log) log->write(local, "epoch_total", avg);
  }
  if (!opts.run_dir.empty()) save_state(opts.run_dir / "checkpoint.ckpt", s);
  return result;
}

std::map<std::string, std::uint64_t> parameter_checksums(Module& m) {
  std::map<std::string, std::uint64_t> out;
  m.visit("", [&out](const std::string& name, Parameter& p) {
    std::uint64_t h = 1469598103934665603ULL;
    const auto* bytes = reinterpret_cast<const unsigned char*>(p.value.data());
    for (std::size_t i = 0; i < p.value.numel() * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
    out[name] = h;
  });
  return out;
}

}  // namespace ttsa
