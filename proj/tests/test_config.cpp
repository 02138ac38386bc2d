// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "test_util.hpp"
#include "ttsa/config.hpp"
#include "ttsa/error.hpp"

namespace ttsa {
namespace {

const std::filesystem::path kConfigs = std::filesystem::path(TTSA_SOURCE_DIR) / "configs";

std::string invalid_message(const nlohmann::json& j) {
  try {
    run_config_from_json(j);
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), "config-invalid");
    return e.what();
  }
  ADD_FAILURE() << "accepted " << j.dump();
  return "";
}

TEST(Config, ShippedDefaultMatchesBuiltIn) {
  std::ifstream in(kConfigs / "default.json");
  ASSERT_TRUE(in.good());
  const nlohmann::json shipped = nlohmann::json::parse(in);
  EXPECT_EQ(shipped, default_config_json());
  EXPECT_EQ(to_json(run_config_from_json(shipped)), shipped);
}

TEST(Config, EveryShippedConfigLoads) {
  int n = 0;
  for (const auto& e : std::filesystem::directory_iterator(kConfigs)) {
    if (e.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_run_config(e.path())) << e.path();
    ++n;
  }
  EXPECT_GE(n, 2);
}

TEST(Config, OverridesApplyOverDefaults) {
  const RunConfig c = run_config_from_json({{"seed", 7}, {"training", {{"batch_size", 4}}}});
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.training.batch_size, 4);
  EXPECT_EQ(c.training.segment_frames, RunConfig{}.training.segment_frames);
  EXPECT_EQ(c.model.acoustic.hidden_dim, 256);
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_NE(invalid_message({{"sed", 1}}).find("sed"), std::string::npos);
  EXPECT_NE(invalid_message({{"training", {{"batch", 4}}}}).find("batch"), std::string::npos);
}

TEST(Config, AllViolationsReported) {
  const std::string msg = invalid_message(
      {{"training", {{"batch_size", 0}}}, {"optimizer", {{"beta1", 1.5}}}, {"audio", {{"hop_length", 100}}}});
  EXPECT_NE(msg.find("batch_size"), std::string::npos) << msg;
  EXPECT_NE(msg.find("beta1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("hop"), std::string::npos) << msg;
}

TEST(Config, TypeErrorsRejected) {
  invalid_message({{"seed", "one"}});
  invalid_message({{"training", 3}});
  invalid_message(nlohmann::json::array());
}

TEST(Config, MissingFileAndBadJson) {
  const auto dir = testing::fresh_dir("config");
  try {
    load_run_config(dir / "nope.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), "config-not-found");
  }
  std::ofstream(dir / "bad.json") << "{ not json";
  try {
    load_run_config(dir / "bad.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), "config-invalid");
  }
}

TEST(Config, ManifestResolvesAgainstConfigDirectory) {
  const auto dir = testing::fresh_dir("config_rel");
  std::ofstream(dir / "run.json") << R"({"data": {"train_manifest": "data/train.tsv"}})";
  const RunConfig c = load_run_config(dir / "run.json");
  EXPECT_EQ(std::filesystem::path(c.train_manifest), dir / "data/train.tsv");
}

TEST(Config, BareNamesUseConfigDirectory) {
  const auto dir = testing::fresh_dir("config_env");
  std::ofstream(dir / "mine.json") << "{}";
  ::setenv("TTSA_CONFIG_DIR", dir.c_str(), 1);
  EXPECT_EQ(default_config_dir(), dir);
  EXPECT_EQ(resolve_config_path("mine"), dir / "mine.json");
  EXPECT_EQ(resolve_config_path("mine.json"), dir / "mine.json");
  ::unsetenv("TTSA_CONFIG_DIR");
  EXPECT_EQ(default_config_dir(), std::filesystem::path("configs"));
  EXPECT_EQ(resolve_config_path("sub/x.json"), std::filesystem::path("sub/x.json"));
}

}  // namespace
}  // namespace ttsa
