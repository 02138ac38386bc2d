// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include "ttsa/eval.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ttsa/error.hpp"
#include "ttsa/model.hpp"

namespace ttsa {

// ---- speaker similarity --------------------------------------------------

MelStatsEmbedder::MelStatsEmbedder(const AudioConfig& audio) : audio_(audio) {}

std::vector<double> MelStatsEmbedder::raw(std::span<const double> waveform) const {
  require(!waveform.empty(), "invalid-argument", "cannot embed empty audio");
  const Tensor mel = compute_mel(waveform, audio_);
  const int frames = mel.dim(0), bins = mel.dim(1);
  std::vector<double> v(static_cast<std::size_t>(2 * bins), 0.0);
  for (int b = 0; b < bins; ++b) {
    double mu = 0.0, sq = 0.0;
    for (int f = 0; f < frames; ++f) mu += mel.at(f, b);
    mu /= frames;
    for (int f = 0; f < frames; ++f) sq += (mel.at(f, b) - mu) * (mel.at(f, b) - mu);
    v[static_cast<std::size_t>(b)] = mu;
    v[static_cast<std::size_t>(bins + b)] = std::sqrt(sq / frames);
  }
  return v;
}

std::vector<double> MelStatsEmbedder::embed(std::span<const double> waveform) const {
  std::vector<double> v = raw(waveform);
  if (!center_.empty())
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= center_[i];
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  require(n > 1e-12, "invalid-argument", "speaker embedding has zero norm");
  for (double& x : v) x /= n;
  return v;
}

void MelStatsEmbedder::fit(std::span<const std::vector<double>> waveforms) {
  require(!waveforms.empty(), "invalid-argument", "fit needs at least one waveform");
  std::vector<double> c(static_cast<std::size_t>(dim()), 0.0);
  for (const auto& w : waveforms) {
    const auto v = raw(w);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += v[i] / static_cast<double>(waveforms.size());
  }
  center_ = std::move(c);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && !a.empty(), "shape-mismatch", "cosine of vectors with different sizes");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  require(aa > 0.0 && bb > 0.0, "invalid-argument", "cosine of a zero vector");
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

double secs(std::span<const double> reference, std::span<const double> synthesized, const SpeakerEmbedder& embedder) {
  require(!reference.empty() && !synthesized.empty(), "invalid-argument", "secs needs non-empty audio");
  const auto a = embedder.embed(reference);
  const auto b = embedder.embed(synthesized);
  return cosine_similarity(a, b);
}

// ---- alignment -----------------------------------------------------------

namespace {

template <typename T>
AlignmentResult align_impl(std::span<const T> r, std::span<const T> h) {
  const std::size_t n = r.size(), m = h.size();
  std::vector<int> d((n + 1) * (m + 1));
  auto at = [&d, m](std::size_t i, std::size_t j) -> int& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      at(i, j) = std::min({at(i - 1, j - 1) + (r[i - 1] == h[j - 1] ? 0 : 1), at(i - 1, j) + 1, at(i, j - 1) + 1});

  AlignmentResult res;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const int cur = at(i, j);
    if (i > 0 && j > 0 && r[i - 1] == h[j - 1] && at(i - 1, j - 1) == cur) {
      ++res.matches;
      res.pairs.push_back({static_cast<int>(i - 1), static_cast<int>(j - 1)});
      --i, --j;
    } else if (i > 0 && j > 0 && r[i - 1] != h[j - 1] && at(i - 1, j - 1) + 1 == cur) {
      ++res.substitutions;
      res.pairs.push_back({static_cast<int>(i - 1), static_cast<int>(j - 1)});
      --i, --j;
    } else if (i > 0 && at(i - 1, j) + 1 == cur) {
      ++res.deletions;
      res.pairs.push_back({static_cast<int>(i - 1), -1});
      --i;
    } else {
      ++res.insertions;
      res.pairs.push_back({-1, static_cast<int>(j - 1)});
      --j;
    }
  }
  std::reverse(res.pairs.begin(), res.pairs.end());
  return res;
}

template <typename T>
double psr_impl(std::span<const T> r, std::span<const T> h) {
  require(!r.empty(), "invalid-argument", "PSR needs a non-empty reference");
  return 100.0 * align_impl(r, h).substitutions / static_cast<double>(r.size());
}

}  // namespace

AlignmentResult align(std::span<const std::string> reference, std::span<const std::string> hypothesis) {
  return align_impl(reference, hypothesis);
}

AlignmentResult align(std::span<const int> reference, std::span<const int> hypothesis) {
  return align_impl(reference, hypothesis);
}

double psr(std::span<const std::string> reference, std::span<const std::string> hypothesis) {
  return psr_impl(reference, hypothesis);
}

double psr(std::span<const int> reference, std::span<const int> hypothesis) { return psr_impl(reference, hypothesis); }

MeanStd mean_std(std::span<const double> values) {
  MeanStd s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= s.count;
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / s.count);
  return s;
}

PsrRow psr_row(const LabeledAudio& u, const std::vector<std::string>& hypothesis) {
  require(!u.phonemes.empty(), "invalid-argument", "utterance " + u.id + " has no reference phonemes");
  const auto a = align(std::span<const std::string>(u.phonemes), std::span<const std::string>(hypothesis));
  const double n = static_cast<double>(u.phonemes.size());
  PsrRow row;
  row.id = u.id;
  row.psr = 100.0 * a.substitutions / n;
  row.insertion_rate = 100.0 * a.insertions / n;
  row.deletion_rate = 100.0 * a.deletions / n;
  row.hypothesis = hypothesis;
  return row;
}

PsrSummary psr_corpus(std::span<const LabeledAudio> utterances, const PhonemeRecognizer& recognizer) {
  require(!utterances.empty(), "invalid-argument", "PSR needs at least one utterance");
  PsrSummary s;
  std::vector<double> p, ins, del;
  for (const auto& u : utterances) {
    try {
      s.rows.push_back(psr_row(u, transcribe(recognizer, u.waveform)));
    } catch (const Error& e) {
      fail(e.category(), "utterance " + u.id + ": " + e.what());
    }
    p.push_back(s.rows.back().psr);
    ins.push_back(s.rows.back().insertion_rate);
    del.push_back(s.rows.back().deletion_rate);
  }
  s.psr = mean_std(p);
  s.insertion_rate = mean_std(ins);
  s.deletion_rate = mean_std(del);
  return s;
}

// ---- MUSHRA --------------------------------------------------------------

MushraValidation validate_against_mushra(std::span<const MushraPair> pairs, const PhonemeRecognizer& recognizer) {
  MushraValidation v;
  for (const auto& p : pairs) {
    for (double s : {p.mushra_a, p.mushra_b})
      require(s >= 0.0 && s <= 100.0, "invalid-argument",
              "MUSHRA score " + std::to_string(s) + " outside [0, 100] for pair " + p.system_a + "|" + p.system_b);
    if (p.mushra_a == p.mushra_b) {
      v.skipped.push_back(p.system_a + "|" + p.system_b);
      continue;
    }
    MushraPairOutcome o;
    o.system_a = p.system_a;
    o.system_b = p.system_b;
    o.psr_a = psr_corpus(p.audio_a, recognizer).psr.mean;
    o.psr_b = psr_corpus(p.audio_b, recognizer).psr.mean;
    o.success = p.mushra_a > p.mushra_b ? o.psr_a < o.psr_b : o.psr_b < o.psr_a;
    v.successes += o.success ? 1 : 0;
    ++v.evaluated;
    v.outcomes.push_back(std::move(o));
  }
  require(v.evaluated > 0, "invalid-argument", "no MUSHRA pair with distinct scores to evaluate");
  v.accuracy = static_cast<double>(v.successes) / v.evaluated;
  return v;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

// Audio list: audio_path TAB phonemes [TAB ignored ...].
std::vector<LabeledAudio> load_audio_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "manifest-not-found", "cannot open " + path.string());
  std::vector<LabeledAudio> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto f = split(line, '\t');
    require(f.size() >= 2, "manifest-parse", path.string() + ":" + std::to_string(n) + ": expected audio path and phonemes");
    std::filesystem::path audio = f[0];
    if (audio.is_relative()) audio = path.parent_path() / audio;
    LabeledAudio a;
    a.id = audio.stem().string();
    std::istringstream ps(f[1]);
    for (std::string p; ps >> p;) a.phonemes.push_back(p);
    require(!a.phonemes.empty(), "manifest-parse", path.string() + ":" + std::to_string(n) + ": no phonemes");
    a.waveform = read_wav(audio).samples;
    out.push_back(std::move(a));
  }
  require(!out.empty(), "manifest-invalid", path.string() + " lists no audio");
  return out;
}

}  // namespace

std::vector<MushraPair> load_mushra_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "manifest-not-found", "cannot open MUSHRA pairs file " + path.string());
  std::vector<MushraPair> out;
  std::string line;
  int n = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto f = split(line, '\t');
    const std::string where = path.string() + ":" + std::to_string(n);
    require(f.size() == 6, "manifest-parse", where + ": expected 6 tab-separated fields, got " + std::to_string(f.size()));
    if (!header) {
      header = true;
      require(f[0] == "system_a" && f[1] == "system_b" && f[2] == "mushra_a" && f[3] == "mushra_b" &&
                  f[4] == "manifest_a" && f[5] == "manifest_b",
              "manifest-parse", where + ": header must be system_a system_b mushra_a mushra_b manifest_a manifest_b");
      continue;
    }
    MushraPair p;
    p.system_a = f[0];
    p.system_b = f[1];
    try {
      std::size_t used = 0;
      p.mushra_a = std::stod(f[2], &used);
      require(used == f[2].size(), "manifest-parse", where + ": bad score");
      p.mushra_b = std::stod(f[3], &used);
      require(used == f[3].size(), "manifest-parse", where + ": bad score");
    } catch (const std::logic_error&) {
      fail("manifest-parse", where + ": scores must be numbers");
    }
    auto resolve = [&path](const std::string& s) {
      std::filesystem::path q = s;
      return q.is_relative() ? path.parent_path() / q : q;
    };
    p.audio_a = load_audio_list(resolve(f[4]));
    p.audio_b = load_audio_list(resolve(f[5]));
    out.push_back(std::move(p));
  }
  require(header, "manifest-parse", path.string() + " is empty");
  return out;
}

// ---- external scorers ----------------------------------------------------

namespace {

std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

}  // namespace

ExternalScore ExternalScorer::score(const std::filesystem::path& reference, const std::filesystem::path& synthesized) const {
  ExternalScore r;
  if (command.empty()) {
    r.note = "not evaluated: no command configured";
    return r;
  }
  const std::string cmd = command + " " + shell_quote(reference.string()) + " " + shell_quote(synthesized.string()) + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    r.note = "not evaluated: cannot start scorer";
    return r;
  }
  std::string text;
  char buf[512];
  while (std::fgets(buf, sizeof buf, pipe)) text += buf;
  const int status = pclose(pipe);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    r.note = "not evaluated: scorer exited with failure";
    return r;
  }
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    std::istringstream ls(line);
    std::string name;
    double v = 0.0;
    if (ls >> name >> v && std::isfinite(v)) r.values[name] = v;
  }
  if (r.values.empty()) {
    r.note = "not evaluated: scorer printed no values";
    return r;
  }
  r.evaluated = true;
  return r;
}

// ---- checkpoint evaluation -----------------------------------------------

namespace {

nlohmann::json summary_json(const MeanStd& s) { return {{"mean", s.mean}, {"std", s.std}, {"count", s.count}}; }

}  // namespace

nlohmann::json evaluate(TtsModel& model, const Manifest& manifest, const EvaluateOptions& options) {
  bool want_secs = false, want_psr = false;
  for (const auto& m : options.metrics) {
    if (m == "secs") want_secs = true;
    else if (m == "psr") want_psr = true;
    else fail("invalid-argument", "unknown metric '" + m + "' (expected secs or psr)");
  }
  require(!want_psr || options.recognizer, "invalid-argument", "psr needs a phoneme recognizer");
  require(!manifest.entries.empty(), "manifest-invalid", "evaluation manifest has no entries");
  const AudioConfig& audio = model.config().audio;

  std::vector<LabeledAudio> refs = labeled_audio(manifest);
  MelStatsEmbedder fallback(audio);
  const SpeakerEmbedder* embedder = options.embedder;
  if (want_secs && !embedder) {
    std::vector<std::vector<double>> w;
    for (const auto& r : refs) w.push_back(r.waveform);
    fallback.fit(w);
    embedder = &fallback;
  }
  std::filesystem::path audio_dir = options.audio_dir;
  if (audio_dir.empty() && !options.scorers.empty())
    audio_dir = std::filesystem::temp_directory_path() / "ttsa-eval";
  if (!audio_dir.empty()) std::filesystem::create_directories(audio_dir);

  nlohmann::json rows = nlohmann::json::array();
  std::vector<double> secs_values, psr_values, ins_values, del_values;
  std::map<std::string, std::map<std::string, std::vector<double>>> ext_values;
  std::map<std::string, std::string> ext_notes;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    const auto& ref = refs[i];
    nlohmann::json row = {{"id", ref.id}, {"speaker", e.speaker_id}, {"language", e.language_id}};
    std::vector<double> syn;
    try {
      syn = model.synthesize(e.phonemes, e.speaker_id, e.language_id);
    } catch (const Error& err) {
      fail(err.category(), "utterance " + ref.id + ": " + err.what());
    }
    std::filesystem::path syn_path, ref_path = e.audio_path;
    if (!audio_dir.empty()) {
      syn_path = audio_dir / (ref.id + ".wav");
      write_wav(syn_path, syn, model.config().audio.sample_rate);
      row["audio"] = syn_path.string();
    }
    if (want_secs) {
      const double s = secs(ref.waveform, syn, *embedder);
      row["secs"] = s;
      secs_values.push_back(s);
    }
    if (want_psr) {
      PsrRow pr;
      try {
        pr = psr_row(ref, transcribe(*options.recognizer, syn));
      } catch (const Error& err) {
        fail(err.category(), "utterance " + ref.id + ": " + err.what());
      }
      row["psr"] = pr.psr;
      row["insertion_rate"] = pr.insertion_rate;
      row["deletion_rate"] = pr.deletion_rate;
      row["hypothesis"] = pr.hypothesis;
      psr_values.push_back(pr.psr);
      ins_values.push_back(pr.insertion_rate);
      del_values.push_back(pr.deletion_rate);
    }
    for (const auto& sc : options.scorers) {
      const ExternalScore r = sc.score(ref_path, syn_path);
      if (!r.evaluated) {
        row[sc.name] = "not evaluated";
        ext_notes[sc.name] = r.note;
        continue;
      }
      for (const auto& [k, v] : r.values) {
        row[sc.name + "." + k] = v;
        ext_values[sc.name][k].push_back(v);
      }
    }
    rows.push_back(std::move(row));
  }

  nlohmann::json agg = nlohmann::json::object();
  if (want_secs) agg["secs"] = summary_json(mean_std(secs_values));
  if (want_psr) {
    agg["psr"] = summary_json(mean_std(psr_values));
    agg["insertion_rate"] = summary_json(mean_std(ins_values));
    agg["deletion_rate"] = summary_json(mean_std(del_values));
  }
  nlohmann::json ext = nlohmann::json::object();
  for (const auto& sc : options.scorers) {
    if (ext_values.count(sc.name) && !ext_notes.count(sc.name)) {
      nlohmann::json m = nlohmann::json::object();
      for (const auto& [k, v] : ext_values[sc.name]) m[k] = summary_json(mean_std(v));
      ext[sc.name] = m;
    } else {
      ext[sc.name] = ext_notes.count(sc.name) ? ext_notes[sc.name] : "not evaluated";
    }
  }
  return {{"format", "ttsa-eval-report"},
          {"version", kEvalReportVersion},
          {"metrics", options.metrics},
          {"utterances", rows},
          {"aggregates", agg},
          {"external", ext}};
}

}  // namespace ttsa
