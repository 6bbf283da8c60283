// Copyright 2026 The motionkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>

#include "mk/checkpoint.hpp"

namespace mk {
namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("mk_ckpt_" + tag + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

TrainConfig short_run() {
  TrainConfig tc;
  tc.steps = 4;
  tc.batch = 2;
  tc.seed = 11;
  return tc;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  TempDir d("roundtrip");
  const DenoiserConfig c;
  TrainState s = start_training(c, short_run());
  train_steps(s, c, short_run(), 2);
  save_checkpoint(d.path, c, short_run(), s);
  const Checkpoint k = load_checkpoint(d.path, c);
  EXPECT_TRUE(k.model == c);
  EXPECT_EQ(k.train.seed, 11u);
  EXPECT_EQ(k.train.base_speeds, short_run().base_speeds);
  EXPECT_EQ(k.state.step, 2u);
  EXPECT_EQ(k.state.adam.t, 2u);
  EXPECT_EQ(k.state.losses, s.losses);
  for (const auto& [name, t] : s.params) {
    EXPECT_TRUE(bitwise_equal(t, k.state.params.at(name))) << name;
    EXPECT_TRUE(bitwise_equal(s.adam.m.at(name), k.state.adam.m.at(name))) << name;
    EXPECT_TRUE(bitwise_equal(s.adam.v.at(name), k.state.adam.v.at(name))) << name;
  }
}

TEST(Checkpoint, ResumeReproducesTheUninterruptedRun) {
  TempDir d("resume");
  const DenoiserConfig c;
  const TrainState full = train(c, short_run());
  TrainState half = start_training(c, short_run());
  train_steps(half, c, short_run(), 2);
  save_checkpoint(d.path, c, short_run(), half);
  Checkpoint k = load_checkpoint(d.path);
  train_steps(k.state, k.model, k.train, 2);
  EXPECT_EQ(k.state.losses, full.losses);
  for (const auto& [name, t] : full.params) EXPECT_TRUE(bitwise_equal(t, k.state.params.at(name))) << name;
}

TEST(Checkpoint, FreshStateWithoutLossesRoundTrips) {
  TempDir d("fresh");
  const DenoiserConfig c;
  save_checkpoint(d.path, c, short_run(), start_training(c, short_run()));
  const auto k = load_checkpoint(d.path);
  EXPECT_EQ(k.state.step, 0u);
  EXPECT_TRUE(k.state.losses.empty());
}

TEST(Checkpoint, MissingIsAFileError) {
  EXPECT_THROW(load_checkpoint(fs::temp_directory_path() / "mk_no_such_checkpoint"), FileError);
  TempDir d("missing_tensor");
  const DenoiserConfig c;
  save_checkpoint(d.path, c, short_run(), start_training(c, short_run()));
  fs::remove(d.path / "param_in.w.mkt");
  EXPECT_THROW(load_checkpoint(d.path), FileError);
}

TEST(Checkpoint, ConfigMismatchIsAConfigError) {
  TempDir d("mismatch");
  const DenoiserConfig c;
  save_checkpoint(d.path, c, short_run(), start_training(c, short_run()));
  DenoiserConfig other = c;
  other.dim = 8;
  EXPECT_THROW(load_checkpoint(d.path, other), ConfigError);
  // A tensor whose shape disagrees with the stored config.
  save_tensor(d.path / "param_in.w.mkt", Tensor<double>({3, 3}));
  EXPECT_THROW(load_checkpoint(d.path), ConfigError);
}

TEST(Checkpoint, CorruptManifestIsAFormatError) {
  TempDir d("corrupt");
  fs::create_directories(d.path);
  write_json_file(d.path / "manifest.json", nlohmann::json{{"format", "something-else"}});
  EXPECT_THROW(load_checkpoint(d.path), FormatError);
  {
    std::ofstream(d.path / "manifest.json") << "{ not json";
  }
  EXPECT_THROW(load_checkpoint(d.path), FormatError);
}

TEST(ConfigJson, RoundTrips) {
  DenoiserConfig c;
  c.dim = 24;
  c.rope_base = 123.456;
  EXPECT_TRUE(denoiser_config_from_json(to_json(c)) == c);
  TrainConfig t;
  t.lr = 1.0 / 3.0;
  t.schedule.mode = ScheduleMode::uniform;
  const TrainConfig u = train_config_from_json(to_json(t));
  EXPECT_EQ(u.lr, t.lr);
  EXPECT_EQ(u.schedule.mode, ScheduleMode::uniform);
  EXPECT_EQ(u.base_speeds, t.base_speeds);
}

}  // namespace
}  // namespace mk
