// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include "ttsa/cli.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>
#include <optional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ttsa/corpus.hpp"
#include "ttsa/error.hpp"
#include "ttsa/eval.hpp"
#include "ttsa/recognizer.hpp"
#include "ttsa/training.hpp"

namespace ttsa {

std::filesystem::path make_run_dir(const std::filesystem::path& root, std::uint64_t seed) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  const std::string base = std::string(stamp) + "-seed" + std::to_string(seed);
  std::filesystem::path dir = root / base;
  for (int k = 1; std::filesystem::exists(dir); ++k) dir = root / (base + "-" + std::to_string(k));
  std::filesystem::create_directories(dir);
  return dir;
}

namespace {

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  require(f.good(), "io", "cannot write " + path.string());
  f << j.dump(2) << "\n";
  require(f.good(), "io", "failed writing " + path.string());
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

struct Shared {
  std::filesystem::path run_root = "runs";
  std::filesystem::path run_dir;
};

std::filesystem::path run_dir_for(const Shared& sh, std::uint64_t seed) {
  if (!sh.run_dir.empty()) {
    std::filesystem::create_directories(sh.run_dir);
    return sh.run_dir;
  }
  return make_run_dir(sh.run_root, seed);
}

void add_run_options(CLI::App* cmd, Shared& sh) {
  cmd->add_option("--run-root", sh.run_root, "Parent directory for timestamped run directories")
      ->capture_default_str();
  cmd->add_option("--run-dir", sh.run_dir, "Exact output directory (overrides --run-root)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ttsa: adapter-based GAN text-to-speech toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every command");

  // train-backbone
  auto* tb = app.add_subcommand("train-backbone", "Train the backbone generator and discriminators");
  std::string tb_config, tb_manifest, tb_resume;
  std::int64_t tb_steps = -1;
  std::int64_t tb_seed = -1;
  Shared tb_sh;
  tb->add_option("--config", tb_config, "Run config (path, or name under $TTSA_CONFIG_DIR)")->required();
  tb->add_option("--manifest", tb_manifest, "Training manifest (overrides data.train_manifest)");
  tb->add_option("--steps", tb_steps, "Stop after this many optimizer steps");
  tb->add_option("--seed", tb_seed, "Override the config seed");
  tb->add_option("--resume", tb_resume, "Continue from a checkpoint");
  add_run_options(tb, tb_sh);

  // finetune
  auto* ft = app.add_subcommand("finetune", "Adapt a backbone to an unseen speaker or language");
  std::string ft_ckpt, ft_manifest, ft_task, ft_mode = "adapters", ft_plan, ft_kind;
  int ft_epochs = -1, ft_spe = -1;
  Shared ft_sh;
  ft->add_option("--checkpoint", ft_ckpt, "Backbone checkpoint")->required();
  ft->add_option("--manifest", ft_manifest, "Adaptation data")->required();
  ft->add_option("--task", ft_task, "language or speaker")->required()->check(CLI::IsMember({"language", "speaker"}));
  ft->add_option("--mode", ft_mode, "full or adapters")->capture_default_str()->check(CLI::IsMember({"full", "adapters"}));
  ft->add_option("--plan", ft_plan, "paper_default, vocoder_reduced or full_model (default: from config)")
      ->check(CLI::IsMember({"paper_default", "vocoder_reduced", "full_model"}));
  ft->add_option("--model-kind", ft_kind, "acoustic, vocoder, both or auto (default: from config)")
      ->check(CLI::IsMember({"acoustic", "vocoder", "both", "auto"}));
  ft->add_option("--epochs", ft_epochs, "Override training.finetune_epochs");
  ft->add_option("--steps-per-epoch", ft_spe, "Override training.steps_per_epoch");
  add_run_options(ft, ft_sh);

  // synthesize
  auto* sy = app.add_subcommand("synthesize", "Render phonemes to a WAV file");
  std::string sy_ckpt, sy_text, sy_speaker, sy_language, sy_out;
  bool sy_strip = false;
  sy->add_option("--checkpoint", sy_ckpt, "Model checkpoint")->required();
  sy->add_option("--text-phonemes", sy_text, "Space-separated phoneme symbols")->required();
  sy->add_option("--speaker", sy_speaker, "Speaker id")->required();
  sy->add_option("--language", sy_language, "Language id")->required();
  sy->add_option("--out", sy_out, "Output WAV path")->required();
  sy->add_flag("--strip-adapters", sy_strip, "Remove adapters and use the backbone alone");

  // count-params
  auto* cp = app.add_subcommand("count-params", "Report backbone and adapter parameter counts");
  std::string cp_ckpt, cp_config, cp_plan = "paper_default", cp_kind = "both";
  cp->add_option("--checkpoint", cp_ckpt, "Checkpoint to count");
  cp->add_option("--config", cp_config, "Config to count (instead of a checkpoint)");
  cp->add_option("--plan", cp_plan, "Placement plan")->capture_default_str()->check(
      CLI::IsMember({"paper_default", "vocoder_reduced", "full_model"}));
  cp->add_option("--model-kind", cp_kind, "acoustic, vocoder or both")->capture_default_str()->check(
      CLI::IsMember({"acoustic", "vocoder", "both"}));

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score synthesized speech against references");
  std::string ev_ckpt, ev_manifest, ev_metrics = "secs,psr", ev_out, ev_recognizer, ev_audio_dir;
  std::vector<std::string> ev_scorers;
  ev->add_option("--checkpoint", ev_ckpt, "Model checkpoint")->required();
  ev->add_option("--manifest", ev_manifest, "References to re-synthesize")->required();
  ev->add_option("--metrics", ev_metrics, "Comma-separated: secs, psr")->capture_default_str();
  ev->add_option("--out", ev_out, "Report path (JSON)")->required();
  ev->add_option("--recognizer", ev_recognizer, "Phoneme recognizer for psr");
  ev->add_option("--audio-dir", ev_audio_dir, "Keep synthesized audio here");
  ev->add_option("--scorer", ev_scorers, "External scorer as name=command (repeatable)");

  // train-recognizer
  auto* tr = app.add_subcommand("train-recognizer", "Train the CTC phoneme recognizer used by psr");
  std::string tr_manifest, tr_out;
  CtcTrainOptions tr_opts;
  ConvRecognizerConfig tr_cfg;
  tr->add_option("--manifest", tr_manifest, "Training audio with phonemes")->required();
  tr->add_option("--out", tr_out, "Recognizer output path")->required();
  tr->add_option("--epochs", tr_opts.epochs, "Training epochs")->capture_default_str();
  tr->add_option("--lr", tr_opts.lr, "Learning rate")->capture_default_str();
  tr->add_option("--hidden", tr_cfg.hidden, "Hidden channels")->capture_default_str();
  tr->add_option("--seed", tr_opts.seed, "Seed")->capture_default_str();

  // validate-psr
  auto* vp = app.add_subcommand("validate-psr", "Check PSR rankings against MUSHRA pairs");
  std::string vp_pairs, vp_recognizer, vp_out;
  vp->add_option("--pairs", vp_pairs, "MUSHRA pairs file")->required();
  vp->add_option("--recognizer", vp_recognizer, "Phoneme recognizer")->required();
  vp->add_option("--out", vp_out, "Optional JSON report");

  // make-corpus
  auto* mc = app.add_subcommand("make-corpus", "Generate a synthetic speech corpus with manifest");
  std::string mc_out, mc_speakers = "S1";
  corpus::CorpusSpec mc_spec;
  mc->add_option("--out", mc_out, "Output directory")->required();
  mc->add_option("--language", mc_spec.language, "Language id")->capture_default_str();
  mc->add_option("--speakers", mc_speakers, "Comma-separated speaker ids")->capture_default_str();
  mc->add_option("--utterances", mc_spec.utterances_per_speaker, "Utterances per speaker")->capture_default_str();
  mc->add_option("--seed", mc_spec.seed, "Seed")->capture_default_str();
  mc->add_option("--prefix", mc_spec.prefix, "Utterance id prefix")->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    std::string msg = e.what();
    for (char& c : msg)
      if (c == '\n') c = ' ';
    err << "error[usage]: " << msg << "\n";
    return 2;
  }

  try {
    if (*tb) {
      RunConfig cfg = load_run_config(resolve_config_path(tb_config));
      if (!tb_manifest.empty()) cfg.train_manifest = tb_manifest;
      if (tb_seed >= 0) cfg.seed = static_cast<std::uint64_t>(tb_seed);
      TrainState state;
      std::vector<Utterance> data;
      if (!tb_resume.empty()) {
        state = load_state(tb_resume);
        require(state.phase == "backbone", "invalid-argument", "--resume needs a backbone checkpoint");
        const Manifest m = load_manifest(cfg.train_manifest.empty() ? state.config.train_manifest : cfg.train_manifest,
                                         state.config.model.audio);
        data = build_utterances(m, state.generator->vocab, state.config.model.audio);
      } else {
        require(!cfg.train_manifest.empty(), "config-invalid", "data.train_manifest is required (or pass --manifest)");
        const Manifest m = load_manifest(cfg.train_manifest, cfg.model.audio);
        state = init_state(cfg, m);
        data = build_utterances(m, state.generator->vocab, cfg.model.audio);
      }
      const auto dir = run_dir_for(tb_sh, state.config.seed);
      write_json(dir / "config.resolved.json", to_json(state.config));
      TrainOptions opts;
      opts.run_dir = dir;
      opts.until_step = tb_steps;
      train_backbone(state, data, opts);
      out << dir.string() << "\n";
      return 0;
    }
    if (*ft) {
      TrainState state = load_state(ft_ckpt);
      const Manifest m = load_manifest(ft_manifest, state.config.model.audio);
      FinetuneOptions opts;
      opts.task = parse_task(ft_task);
      opts.mode = parse_mode(ft_mode);
      opts.plan = parse_plan_variant(ft_plan.empty() ? state.config.plan : ft_plan);
      const std::string kind = ft_kind.empty() ? state.config.model_kind : ft_kind;
      opts.model_kind = kind == "auto" ? default_model_kind(opts.task) : parse_model_kind(kind);
      opts.epochs = ft_epochs;
      opts.steps_per_epoch = ft_spe;
      const auto dir = run_dir_for(ft_sh, state.config.seed);
      opts.run_dir = dir;
      write_json(dir / "config.resolved.json",
                 [&] {
                   nlohmann::json j = to_json(state.config);
                   j["task"] = ft_task == "language" ? "finetune_language" : "finetune_speaker";
                   j["mode"] = ft_mode;
                   j["adapters"]["plan"] = to_string(opts.plan);
                   j["adapters"]["model_kind"] = to_string(opts.model_kind);
                   return j;
                 }());
      const FinetuneResult r = finetune(state, m, opts);
      for (std::size_t e = 0; e < r.epoch_totals.size(); ++e)
        out << "epoch " << e + 1 << " mean total " << r.epoch_totals[e] << "\n";
      out << "trainable " << r.counts.trainable << " frozen " << r.counts.frozen << " ratio " << r.counts.ratio << "\n";
      out << dir.string() << "\n";
      return 0;
    }
    if (*sy) {
      TrainState state = load_state(sy_ckpt);
      if (sy_strip) state.generator->strip_adapters();
      const auto phonemes = split_words(sy_text);
      require(!phonemes.empty(), "invalid-argument", "--text-phonemes is empty");
      const auto wave = state.generator->synthesize(phonemes, sy_speaker, sy_language);
      write_wav(sy_out, wave, state.config.model.audio.sample_rate);
      write_json(std::filesystem::path(sy_out + ".config.json"), to_json(state.config));
      out << sy_out << "\t" << wave.size() << " samples\n";
      return 0;
    }
    if (*cp) {
      require(cp_ckpt.empty() != cp_config.empty(), "invalid-argument", "pass exactly one of --checkpoint or --config");
      RunConfig cfg;
      std::unique_ptr<TtsModel> model;
      if (!cp_ckpt.empty()) {
        TrainState state = load_state(cp_ckpt);
        cfg = state.config;
        model = std::move(state.generator);
        model->strip_adapters();
      } else {
        cfg = load_run_config(resolve_config_path(cp_config));
        model = std::make_unique<TtsModel>(cfg.model, cfg.seed);
      }
      const std::size_t backbone = model->backbone_parameter_count();
      const auto plan =
          build_placement_plan(cfg.model, parse_model_kind(cp_kind), parse_plan_variant(cp_plan), cfg.adapters);
      const std::size_t ac = plan.parameter_count("acoustic."), vo = plan.parameter_count("vocoder.");
      inject(*model, plan, 0);
      model->fork_conditioning();
      const FreezeCounts fc = count_parameters(*model, adapter_freeze_spec());
      out << "backbone\t" << backbone << "\n";
      out << "acoustic_adapters\t" << ac << "\n";
      out << "vocoder_adapters\t" << vo << "\n";
      out << "adapters_total\t" << ac + vo << "\n";
      out << "trainable_with_conditioning\t" << fc.trainable << "\n";
      out << "ratio\t" << fc.ratio << "\n";
      return 0;
    }
    if (*ev) {
      TrainState state = load_state(ev_ckpt);
      const Manifest m = load_manifest(ev_manifest, state.config.model.audio);
      EvaluateOptions opts;
      opts.metrics = split_list(ev_metrics);
      std::optional<ConvRecognizer> rec;
      if (!ev_recognizer.empty()) {
        rec.emplace(load_recognizer(ev_recognizer));
        opts.recognizer = &*rec;
      }
      for (const auto& s : ev_scorers) {
        const auto eq = s.find('=');
        require(eq != std::string::npos && eq > 0, "invalid-argument", "--scorer expects name=command, got '" + s + "'");
        opts.scorers.push_back({s.substr(0, eq), s.substr(eq + 1)});
      }
      opts.audio_dir = ev_audio_dir;
      nlohmann::json report = evaluate(*state.generator, m, opts);
      report["checkpoint"] = ev_ckpt;
      report["manifest"] = ev_manifest;
      write_json(ev_out, report);
      write_json(std::filesystem::path(ev_out + ".config.json"), to_json(state.config));
      out << ev_out << "\n";
      return 0;
    }
    if (*tr) {
      const Manifest m = load_manifest(tr_manifest);
      const auto corpus = labeled_audio(m);
      ConvRecognizer rec(m.phonemes, tr_cfg, tr_opts.seed);
      const auto history = ctc_train(rec, corpus, tr_opts);
      save_recognizer(tr_out, rec);
      for (std::size_t e = 0; e < history.size(); ++e) out << "epoch " << e + 1 << " ctc " << history[e] << "\n";
      out << tr_out << "\n";
      return 0;
    }
    if (*vp) {
      const auto pairs = load_mushra_pairs(vp_pairs);
      const ConvRecognizer rec = load_recognizer(vp_recognizer);
      const MushraValidation v = validate_against_mushra(pairs, rec);
      nlohmann::json j = {{"accuracy", v.accuracy}, {"evaluated", v.evaluated}, {"successes", v.successes},
                          {"skipped", v.skipped},   {"pairs", nlohmann::json::array()}};
      for (const auto& o : v.outcomes)
        j["pairs"].push_back({{"system_a", o.system_a}, {"system_b", o.system_b}, {"psr_a", o.psr_a},
                              {"psr_b", o.psr_b}, {"success", o.success}});
      if (!vp_out.empty()) write_json(vp_out, j);
      out << "accuracy " << v.accuracy << " (" << v.successes << "/" << v.evaluated << ")";
      if (!v.skipped.empty()) out << ", skipped " << v.skipped.size() << " tied pair(s)";
      out << "\n";
      return 0;
    }
    if (*mc) {
      mc_spec.speakers = split_list(mc_speakers);
      require(!mc_spec.speakers.empty(), "invalid-argument", "--speakers is empty");
      out << corpus::generate(mc_out, mc_spec).string() << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::string msg = e.what();
    for (char& c : msg)
      if (c == '\n') c = ' ';
    err << "error[" << e.category() << "]: " << msg << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace ttsa
