// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "test_util.hpp"
#include "ttsa/error.hpp"
#include "ttsa/eval.hpp"
#include "ttsa/model.hpp"
#include "ttsa/training.hpp"

namespace ttsa {
namespace {

using Seq = std::vector<int>;

// Levenshtein distance by memoized recursion.
class EditOracle {
 public:
  EditOracle(const Seq& r, const Seq& h) : r_(r), h_(h) {}

  int dist(int i, int j) {
    if (i == 0) return j;
    if (j == 0) return i;
    const auto key = std::make_pair(i, j);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const int v = std::min({dist(i - 1, j - 1) + (r_[i - 1] == h_[j - 1] ? 0 : 1), dist(i - 1, j) + 1,
                            dist(i, j - 1) + 1});
    memo_[key] = v;
    return v;
  }

  // Walks back from the end preferring match, substitution, deletion,
  // insertion among optimal moves; returns the substitution count.
  int substitutions(int i, int j) {
    if (i == 0 || j == 0) return 0;
    const int d = dist(i, j);
    if (r_[i - 1] == h_[j - 1] && dist(i - 1, j - 1) == d) return substitutions(i - 1, j - 1);
    if (r_[i - 1] != h_[j - 1] && dist(i - 1, j - 1) + 1 == d) return 1 + substitutions(i - 1, j - 1);
    if (dist(i - 1, j) + 1 == d) return substitutions(i - 1, j);
    return substitutions(i, j - 1);
  }

 private:
  const Seq& r_;
  const Seq& h_;
  std::map<std::pair<int, int>, int> memo_;
};

std::vector<Seq> all_sequences(int max_len, int alphabet) {
  std::vector<Seq> out = {{}};
  for (std::size_t b = 0; b < out.size(); ++b) {
    if (static_cast<int>(out[b].size()) == max_len) continue;
    for (int a = 0; a < alphabet; ++a) {
      Seq s = out[b];
      s.push_back(a);
      out.push_back(s);
    }
  }
  return out;
}

void check_alignment(const Seq& r, const Seq& h, const AlignmentResult& a) {
  EXPECT_EQ(a.matches + a.substitutions + a.deletions, static_cast<int>(r.size()));
  EXPECT_EQ(a.matches + a.substitutions + a.insertions, static_cast<int>(h.size()));
  int ri = 0, hi = 0, subs = 0, ins = 0, del = 0, match = 0;
  for (const auto& p : a.pairs) {
    if (p.ref >= 0) EXPECT_EQ(p.ref, ri++);
    if (p.hyp >= 0) EXPECT_EQ(p.hyp, hi++);
    if (p.ref >= 0 && p.hyp >= 0) (r[p.ref] == h[p.hyp] ? match : subs)++;
    else if (p.ref >= 0) ++del;
    else if (p.hyp >= 0) ++ins;
    else ADD_FAILURE() << "empty pair";
  }
  EXPECT_EQ(ri, static_cast<int>(r.size()));
  EXPECT_EQ(hi, static_cast<int>(h.size()));
  EXPECT_EQ(match, a.matches);
  EXPECT_EQ(subs, a.substitutions);
  EXPECT_EQ(ins, a.insertions);
  EXPECT_EQ(del, a.deletions);
}

TEST(Alignment, MatchesRecursiveOracleExhaustively) {
  const auto seqs = all_sequences(4, 3);
  int checked = 0;
  for (const auto& r : seqs)
    for (const auto& h : seqs) {
      const AlignmentResult a = align(std::span<const int>(r), std::span<const int>(h));
      EditOracle o(r, h);
      const int n = static_cast<int>(r.size()), m = static_cast<int>(h.size());
      ASSERT_EQ(a.distance(), o.dist(n, m));
      ASSERT_EQ(a.substitutions, o.substitutions(n, m));
      ++checked;
    }
  EXPECT_EQ(checked, 121 * 121);
}

TEST(Alignment, PairsAreConsistentOnRandomSequences) {
  Rng rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    Seq r(static_cast<std::size_t>(rng.below(12))), h(static_cast<std::size_t>(rng.below(12)));
    for (int& v : r) v = rng.below(4);
    for (int& v : h) v = rng.below(4);
    const AlignmentResult a = align(std::span<const int>(r), std::span<const int>(h));
    check_alignment(r, h, a);
    EditOracle o(r, h);
    EXPECT_EQ(a.distance(), o.dist(static_cast<int>(r.size()), static_cast<int>(h.size())));
  }
}

TEST(Alignment, StringExamples) {
  const std::vector<std::string> ref = {"k", "a", "t"}, hyp = {"k", "o", "t", "s"};
  const AlignmentResult a = align(std::span<const std::string>(ref), std::span<const std::string>(hyp));
  EXPECT_EQ(a.matches, 2);
  EXPECT_EQ(a.substitutions, 1);
  EXPECT_EQ(a.insertions, 1);
  EXPECT_EQ(a.deletions, 0);
}

TEST(Psr, Properties) {
  const Seq r = {1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(psr(std::span<const int>(r), std::span<const int>(r)), 0.0);
  const Seq all_wrong = {5, 6, 7, 8};
  EXPECT_DOUBLE_EQ(psr(std::span<const int>(r), std::span<const int>(all_wrong)), 100.0);
  const Seq one_sub = {1, 9, 3, 4};
  EXPECT_DOUBLE_EQ(psr(std::span<const int>(r), std::span<const int>(one_sub)), 25.0);
  // Pure insertions and deletions are not substitutions.
  const Seq longer = {1, 2, 3, 4, 4, 4}, shorter = {1, 4};
  EXPECT_DOUBLE_EQ(psr(std::span<const int>(r), std::span<const int>(longer)), 0.0);
  EXPECT_DOUBLE_EQ(psr(std::span<const int>(r), std::span<const int>(shorter)), 0.0);
  const Seq empty;
  EXPECT_DOUBLE_EQ(psr(std::span<const int>(r), std::span<const int>(empty)), 0.0);
  EXPECT_THROW(psr(std::span<const int>(empty), std::span<const int>(r)), Error);

  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    Seq a(static_cast<std::size_t>(1 + rng.below(8))), b(static_cast<std::size_t>(rng.below(8)));
    for (int& v : a) v = rng.below(3);
    for (int& v : b) v = rng.below(3);
    const double p = psr(std::span<const int>(a), std::span<const int>(b));
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 100.0);
    // A shared, matching suffix does not change the substitution count.
    Seq as = a, bs = b;
    for (int k = 0; k < 3; ++k) {
      as.push_back(7);
      bs.push_back(7);
    }
    EXPECT_EQ(align(std::span<const int>(as), std::span<const int>(bs)).substitutions,
              align(std::span<const int>(a), std::span<const int>(b)).substitutions);
  }
}

TEST(Psr, MeanStdIsPopulation) {
  const std::vector<double> v = {0.0, 50.0};
  const MeanStd s = mean_std(v);
  EXPECT_DOUBLE_EQ(s.mean, 25.0);
  EXPECT_DOUBLE_EQ(s.std, 25.0);
  EXPECT_EQ(s.count, 2);
  EXPECT_EQ(mean_std({}).count, 0);
}

TEST(Psr, CorpusWithOracleRecognizer) {
  testing::SampleCodeRecognizer rec({"a", "b", "c", "d"});
  const std::vector<std::string> r1 = {"a", "b", "c", "d"}, r2 = {"a", "b"};
  const std::vector<std::string> h2 = {"a", "c"};
  std::vector<LabeledAudio> corpus = {{"u1", rec.speak(r1), r1}, {"u2", rec.speak(h2), r2}};
  const PsrSummary s = psr_corpus(corpus, rec);
  ASSERT_EQ(s.rows.size(), 2u);
  EXPECT_EQ(s.rows[0].hypothesis, r1);
  EXPECT_DOUBLE_EQ(s.rows[0].psr, 0.0);
  EXPECT_DOUBLE_EQ(s.rows[1].psr, 50.0);
  EXPECT_DOUBLE_EQ(s.psr.mean, 25.0);
  EXPECT_DOUBLE_EQ(s.psr.std, 25.0);

  const PsrRow ins = psr_row(corpus[0], {"a", "b", "c", "c", "d"});
  EXPECT_DOUBLE_EQ(ins.insertion_rate, 25.0);
  EXPECT_DOUBLE_EQ(ins.deletion_rate, 0.0);
  EXPECT_DOUBLE_EQ(ins.psr, 0.0);
  const PsrRow del = psr_row(corpus[0], {"a", "c", "d"});
  EXPECT_DOUBLE_EQ(del.insertion_rate, 0.0);
  EXPECT_DOUBLE_EQ(del.deletion_rate, 25.0);
  EXPECT_DOUBLE_EQ(del.psr, 0.0);
  // Equal-cost alignments resolve toward substitutions at the end.
  EXPECT_DOUBLE_EQ(psr_row(corpus[0], {"a", "b", "b", "c"}).psr, 50.0);
}

// Log-sum-exp over every frame-level path that collapses to the labels.
double ctc_oracle(const Tensor& logp, const Seq& labels, int blank) {
  const int t = logp.dim(0), k = logp.dim(1);
  double total = 0.0;
  Seq path(static_cast<std::size_t>(t), 0);
  std::function<void(int)> rec = [&](int pos) {
    if (pos == t) {
      Seq out;
      int prev = -1;
      for (int s : path) {
        if (s != prev && s != blank) out.push_back(s);
        prev = s;
      }
      if (out != labels) return;
      double lp = 0.0;
      for (int i = 0; i < t; ++i) lp += logp.at(i, path[static_cast<std::size_t>(i)]);
      total += std::exp(lp);
      return;
    }
    for (int s = 0; s < k; ++s) {
      path[static_cast<std::size_t>(pos)] = s;
      rec(pos + 1);
    }
  };
  rec(0);
  return -std::log(total);
}

Tensor random_log_posteriors(int frames, int k, Rng& rng) {
  Tensor out({frames, k});
  for (int i = 0; i < frames; ++i) {
    double z = 0.0;
    for (int s = 0; s < k; ++s) z += (out.at(i, s) = std::exp(rng.normal()));
    for (int s = 0; s < k; ++s) out.at(i, s) = std::log(out.at(i, s) / z);
  }
  return out;
}

TEST(Ctc, MatchesPathEnumeration) {
  Rng rng(8);
  const int k = 3, blank = 2;
  const std::vector<Seq> label_sets = {{}, {0}, {1}, {0, 1}, {1, 1}, {0, 0}};
  for (int frames = 1; frames <= 4; ++frames)
    for (const Seq& labels : label_sets) {
      const int repeats = labels.size() == 2 && labels[0] == labels[1] ? 1 : 0;
      if (frames < static_cast<int>(labels.size()) + repeats) continue;
      const Tensor logp = random_log_posteriors(frames, k, rng);
      EXPECT_NEAR(ctc_loss_value(logp, labels, blank), ctc_oracle(logp, labels, blank), 1e-9)
          << frames << " frames, " << labels.size() << " labels";
    }
}

TEST(Ctc, ClosedForms) {
  Rng rng(9);
  const Tensor one = random_log_posteriors(1, 3, rng);
  const Seq label = {1};
  EXPECT_NEAR(ctc_loss_value(one, label, 2), -one.at(0, 1), 1e-12);
  const Tensor many = random_log_posteriors(5, 3, rng);
  double blanks = 0.0;
  for (int t = 0; t < 5; ++t) blanks -= many.at(t, 2);
  EXPECT_NEAR(ctc_loss_value(many, {}, 2), blanks, 1e-12);
}

TEST(Ctc, InfeasibleLabelsRejected) {
  Rng rng(10);
  const Tensor logp = random_log_posteriors(2, 3, rng);
  const Seq repeat = {1, 1};
  try {
    ctc_loss_value(logp, repeat, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), "ctc-infeasible");
  }
}

Seq greedy_oracle(const Tensor& logp, int blank) {
  Seq best;
  for (int t = 0; t < logp.dim(0); ++t) {
    int arg = 0;
    for (int s = 1; s < logp.dim(1); ++s)
      if (logp.at(t, s) > logp.at(t, arg)) arg = s;
    best.push_back(arg);
  }
  Seq out;
  for (std::size_t t = 0; t < best.size(); ++t)
    if (best[t] != blank && (t == 0 || best[t] != best[t - 1])) out.push_back(best[t]);
  return out;
}

TEST(Ctc, GreedyDecoding) {
  auto onehot = [](const Seq& frames, int k) {
    Tensor t({static_cast<int>(frames.size()), k}, std::log(0.01));
    for (std::size_t i = 0; i < frames.size(); ++i) t.at(static_cast<int>(i), frames[i]) = std::log(0.9);
    return t;
  };
  EXPECT_EQ(ctc_decode(onehot({0, 0, 2, 0, 1, 1, 2}, 3), 2), (Seq{0, 0, 1}));
  EXPECT_EQ(ctc_decode(onehot({2, 2, 2}, 3), 2), Seq{});
  EXPECT_EQ(ctc_decode(onehot({1, 0, 1}, 3), 2), (Seq{1, 0, 1}));
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor logp = random_log_posteriors(1 + rng.below(20), 4, rng);
    EXPECT_EQ(ctc_decode(logp, 3), greedy_oracle(logp, 3));
  }
  testing::SampleCodeRecognizer rec({"x", "y"});
  const std::vector<std::string> spoken = {"x", "x", "y"};
  EXPECT_EQ(transcribe(rec, rec.speak(spoken)), spoken);
}

TEST(Secs, Properties) {
  const std::vector<double> a = {1.0, 2.0, -1.0}, b = {2.0, 4.0, -2.0}, c = {-1.0, -2.0, 1.0};
  EXPECT_NEAR(cosine_similarity(a, b), 1.0, 1e-12);
  EXPECT_NEAR(cosine_similarity(a, c), -1.0, 1e-12);
  const std::vector<double> d = {2.0, -1.0, 0.0};
  EXPECT_NEAR(cosine_similarity(a, d), 0.0, 1e-12);

  const auto dir = testing::fresh_dir("secs");
  const auto manifest = load_manifest(testing::make_corpus(dir, {"spkA", "spkB"}, 3, 21));
  const auto audio = labeled_audio(manifest);
  std::vector<std::vector<double>> waves;
  for (const auto& u : audio) waves.push_back(u.waveform);
  MelStatsEmbedder emb;
  emb.fit(waves);
  const auto e = emb.embed(waves[0]);
  EXPECT_EQ(static_cast<int>(e.size()), emb.dim());
  double norm = 0.0;
  for (double v : e) norm += v * v;
  EXPECT_NEAR(norm, 1.0, 1e-9);
  EXPECT_NEAR(secs(waves[0], waves[0], emb), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(secs(waves[0], waves[4], emb), secs(waves[4], waves[0], emb));
  // Entries 0..2 are spkA, 3..5 spkB.
  double same = 0.0, diff = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (i != j) same += secs(waves[static_cast<std::size_t>(i)], waves[static_cast<std::size_t>(j)], emb) / 6.0;
      diff += secs(waves[static_cast<std::size_t>(i)], waves[static_cast<std::size_t>(3 + j)], emb) / 9.0;
    }
  EXPECT_GT(same, diff);
}

class MushraTest : public ::testing::Test {
 protected:
  MushraTest() : rec_({"a", "b", "c", "d"}) {}

  // Utterances whose transcripts have `wrong` of four phonemes substituted.
  std::vector<LabeledAudio> system(int wrong) const {
    std::vector<LabeledAudio> out;
    for (int u = 0; u < 3; ++u) {
      std::vector<std::string> ref = {"a", "b", "c", "d"}, said = ref;
      for (int i = 0; i < wrong; ++i) said[static_cast<std::size_t>(i)] = said[static_cast<std::size_t>(i)] == "a" ? "d" : "a";
      out.push_back({"u" + std::to_string(u), rec_.speak(said), ref});
    }
    return out;
  }

  testing::SampleCodeRecognizer rec_;
};

TEST_F(MushraTest, AgreementAndTies) {
  std::vector<MushraPair> pairs = {
      {"good", "bad", 80.0, 40.0, system(0), system(2)},
      {"bad", "worse", 40.0, 20.0, system(2), system(3)},
      {"tie1", "tie2", 50.0, 50.0, system(1), system(1)},
  };
  MushraValidation v = validate_against_mushra(pairs, rec_);
  EXPECT_EQ(v.evaluated, 2);
  EXPECT_DOUBLE_EQ(v.accuracy, 1.0);
  ASSERT_EQ(v.skipped.size(), 1u);
  EXPECT_EQ(v.skipped[0], "tie1|tie2");

  pairs[1].mushra_a = 10.0;  // listeners now prefer the system with more substitutions
  v = validate_against_mushra(pairs, rec_);
  EXPECT_DOUBLE_EQ(v.accuracy, 0.5);
  EXPECT_FALSE(v.outcomes[1].success);
  EXPECT_DOUBLE_EQ(v.outcomes[1].psr_a, 50.0);
  EXPECT_DOUBLE_EQ(v.outcomes[1].psr_b, 75.0);
}

TEST_F(MushraTest, Errors) {
  std::vector<MushraPair> pairs = {{"a", "b", 50.0, 50.0, system(0), system(1)}};
  EXPECT_THROW(validate_against_mushra(pairs, rec_), Error);
  pairs[0].mushra_a = 120.0;
  EXPECT_THROW(validate_against_mushra(pairs, rec_), Error);
}

TEST_F(MushraTest, PairsFileRoundTrip) {
  const auto dir = testing::fresh_dir("mushra");
  auto write_system = [&](const std::string& name, int wrong) {
    std::ofstream list(dir / (name + ".tsv"));
    for (const auto& u : system(wrong)) {
      write_wav(dir / (name + "_" + u.id + ".wav"), u.waveform, 16000);
      list << name << "_" << u.id << ".wav\t";
      for (std::size_t i = 0; i < u.phonemes.size(); ++i) list << (i ? " " : "") << u.phonemes[i];
      list << "\n";
    }
  };
  write_system("sysA", 0);
  write_system("sysB", 3);
  {
    std::ofstream f(dir / "pairs.tsv");
    f << "system_a\tsystem_b\tmushra_a\tmushra_b\tmanifest_a\tmanifest_b\n";
    f << "sysA\tsysB\t71.5\t30\tsysA.tsv\tsysB.tsv\n";
  }
  const auto pairs = load_mushra_pairs(dir / "pairs.tsv");
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_DOUBLE_EQ(pairs[0].mushra_a, 71.5);
  ASSERT_EQ(pairs[0].audio_a.size(), 3u);
  EXPECT_EQ(pairs[0].audio_b[0].phonemes, (std::vector<std::string>{"a", "b", "c", "d"}));
  const MushraValidation v = validate_against_mushra(pairs, rec_);
  EXPECT_DOUBLE_EQ(v.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(v.outcomes[0].psr_b, 75.0);

  std::ofstream(dir / "bad.tsv") << "a\tb\n";
  try {
    load_mushra_pairs(dir / "bad.tsv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), "manifest-parse");
  }
}

TEST(ExternalScorers, ParsesValuesAndReportsMissingTools) {
  const auto dir = testing::fresh_dir("scorer");
  const auto script = dir / "score.sh";
  std::ofstream(script) << "#!/bin/sh\necho \"mcd 4.25\"\necho \"f0_rmse 12\"\n";
  std::filesystem::permissions(script, std::filesystem::perms::owner_all);
  const ExternalScorer toy{"toy", script.string()};
  const ExternalScore ok = toy.score(dir / "r.wav", dir / "s.wav");
  EXPECT_TRUE(ok.evaluated);
  EXPECT_DOUBLE_EQ(ok.values.at("mcd"), 4.25);
  EXPECT_DOUBLE_EQ(ok.values.at("f0_rmse"), 12.0);

  const ExternalScorer absent{"nisqa", (dir / "absent").string()};
  const ExternalScore missing = absent.score(dir / "r.wav", dir / "s.wav");
  EXPECT_FALSE(missing.evaluated);
  EXPECT_NE(missing.note.find("not evaluated"), std::string::npos);
  const ExternalScorer empty{"empty", ""};
  EXPECT_FALSE(empty.score(dir / "r.wav", dir / "s.wav").evaluated);
}

TEST(Recognizer, CtcTrainingReducesLoss) {
  const auto dir = testing::fresh_dir("ctc_train");
  const auto manifest = load_manifest(testing::make_corpus(dir, {"spk1"}, 3, 31));
  const auto audio = labeled_audio(manifest);
  ConvRecognizerConfig cfg;
  cfg.hidden = 16;
  cfg.kernels = {5, 3};
  ConvRecognizer rec(manifest.phonemes, cfg, 3);
  const double before = ctc_corpus_loss(rec, audio);
  CtcTrainOptions opt;
  opt.epochs = 8;
  opt.lr = 5e-3;
  const auto losses = ctc_train(rec, audio, opt);
  ASSERT_EQ(losses.size(), 8u);
  const double after = ctc_corpus_loss(rec, audio);
  EXPECT_LT(after, before);
  EXPECT_LT(losses.back(), losses.front());

  save_recognizer(dir / "rec.ckpt", rec);
  const ConvRecognizer loaded = load_recognizer(dir / "rec.ckpt");
  EXPECT_EQ(loaded.symbols(), rec.symbols());
  EXPECT_EQ(loaded.posteriors(audio[0].waveform).storage(), rec.posteriors(audio[0].waveform).storage());
}

TEST(Evaluate, ReportStructure) {
  const auto dir = testing::fresh_dir("evaluate");
  const auto manifest = load_manifest(testing::make_corpus(dir / "corpus", {"spk1"}, 2, 41));
  TrainState s = init_state(testing::tiny_run_config(), manifest);
  testing::SampleCodeRecognizer rec(manifest.phonemes);
  EvaluateOptions o;
  o.recognizer = &rec;
  o.audio_dir = dir / "audio";
  o.scorers = {{"absent", (dir / "absent").string()}};
  const nlohmann::json r = evaluate(*s.generator, manifest, o);
  EXPECT_EQ(r.at("format"), "ttsa-eval-report");
  EXPECT_EQ(r.at("version"), kEvalReportVersion);
  ASSERT_EQ(r.at("utterances").size(), 2u);
  for (const auto& u : r.at("utterances")) {
    EXPECT_LE(u.at("secs").get<double>(), 1.0);
    EXPECT_GE(u.at("psr").get<double>(), 0.0);
  }
  EXPECT_EQ(r.at("aggregates").at("secs").at("count"), 2);
  EXPECT_EQ(r.at("aggregates").at("psr").at("count"), 2);
  EXPECT_FALSE(r.at("external").empty());
  EXPECT_FALSE(std::filesystem::is_empty(dir / "audio"));

  EvaluateOptions bad;
  bad.metrics = {"psr"};
  EXPECT_THROW(evaluate(*s.generator, manifest, bad), Error);
  bad.metrics = {"wer"};
  EXPECT_THROW(evaluate(*s.generator, manifest, bad), Error);
}

}  // namespace
}  // namespace ttsa
