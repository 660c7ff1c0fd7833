// Copyright 2026 The Flowse Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "flowse/commands.h"
#include "flowse/corpus_store.h"
#include "flowse/run_config.h"
#include "flowse/wav.h"

namespace flowse {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result Invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = RunCommandLine(args, out, err);
  return {code, out.str(), err.str()};
}

std::string ReadFile(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

size_t CountLines(const fs::path& p) {
  std::ifstream is(p);
  size_t n = 0;
  for (std::string line; std::getline(is, line);) ++n;
  return n;
}

TEST(RunConfigTest, DefaultsAndSideInfoDimFollowTask) {
  auto cfg = RunConfig::FromJson(nlohmann::json::object());
  EXPECT_EQ(cfg.corpus.n_train, 2000);
  EXPECT_DOUBLE_EQ(cfg.train.lr, 1e-4);
  EXPECT_DOUBLE_EQ(cfg.train.ema_decay, 0.999);
  EXPECT_EQ(cfg.train.batch_size, 16);
  EXPECT_EQ(cfg.sampler.n_steps, 1);
  EXPECT_EQ(cfg.model.side_info_dim, kEnhanceSideDim);
  auto sep = RunConfig::FromJson({{"corpus", {{"task", "separate"}}}});
  EXPECT_EQ(sep.model.side_info_dim, kSeparateSideDim);
  EXPECT_THROW(RunConfig::FromJson({{"corpus", {{"task", "separate"}}},
                                    {"model", {{"side_info_dim", 8}}}}),
               ConfigError);
}

TEST(RunConfigTest, RejectsUnknownKeysAtEveryLevel) {
  EXPECT_THROW(RunConfig::FromJson({{"trian", nlohmann::json::object()}}), ConfigError);
  EXPECT_THROW(RunConfig::FromJson({{"corpus", {{"n_trian", 3}}}}), ConfigError);
  EXPECT_THROW(RunConfig::FromJson({{"sampler", {{"steps", 3}}}}), ConfigError);
  EXPECT_THROW(RunConfig::FromJson({{"model", {{"width", 3}}}}), ConfigError);
  EXPECT_THROW(RunConfig::FromJson({{"corpus", {{"task", "denoise"}}}}), ConfigError);
}

TEST(RunConfigTest, DottedOverrides) {
  nlohmann::json j = {{"train", {{"lr", 1e-4}}}};
  ApplyOverride(j, "train.lr=0.01");
  ApplyOverride(j, "model.size_variant=large");
  ApplyOverride(j, "output_dir=runs/x");
  auto cfg = RunConfig::FromJson(j);
  EXPECT_DOUBLE_EQ(cfg.train.lr, 0.01);
  EXPECT_EQ(cfg.model.size_variant, SizeVariant::kLarge);
  EXPECT_TRUE(cfg.model.duplicate_convs);
  EXPECT_EQ(cfg.output_dir, "runs/x");
  EXPECT_THROW(ApplyOverride(j, "train.lr"), ConfigError);
  EXPECT_THROW(ApplyOverride(j, "train..lr=1"), ConfigError);
}

TEST(RunConfigTest, TrainingDigestIgnoresSampler) {
  RunConfig a, b;
  b.sampler.n_steps = 30;
  b.output_dir = "elsewhere";
  EXPECT_EQ(a.TrainingDigest(), b.TrainingDigest());
  b.train.lr = 3e-4;
  EXPECT_NE(a.TrainingDigest(), b.TrainingDigest());
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::path(::testing::TempDir()) /
            ("flowse_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    config_ = (root_ / "cfg.json").string();
    std::ofstream(config_) << nlohmann::json{
        {"corpus", {{"n_train", 16}, {"n_val", 2}, {"n_test", 3}, {"duration_s", 1.0}}},
        {"train", {{"epochs", 1}, {"batch_size", 8}, {"crop_frames", 32}, {"lr", 1e-3}}},
        {"model", {{"size_variant", "small"}, {"base_channels", 4}}},
        {"output_dir", (root_ / "run").string()}}.dump();
  }
  void TearDown() override { fs::remove_all(root_); }

  std::vector<std::string> With(std::vector<std::string> args) const {
    args.insert(args.end(), {"--config", config_, "--cache-dir", (root_ / "cache").string()});
    return args;
  }
  std::string Checkpoint() {
    auto r = Invoke(With({"train"}));
    EXPECT_EQ(r.code, kExitOk) << r.err;
    return (root_ / "run" / "best.ckpt").string();
  }
  fs::path CorpusDir() const {
    RunConfig cfg = LoadRunConfig(config_, {});
    return CorpusDirectory(cfg.corpus, (root_ / "cache").string());
  }

  fs::path root_;
  std::string config_;
};

TEST_F(CliTest, GenDataIsIdempotent) {
  auto first = Invoke(With({"gen-data"}));
  ASSERT_EQ(first.code, kExitOk) << first.err;
  EXPECT_NE(first.out.find("effective config: "), std::string::npos);
  EXPECT_EQ(CountLines(CorpusDir() / "manifest.jsonl"), 16u + 2u + 3u);
  std::map<std::string, fs::file_time_type> stamps;
  for (const auto& e : fs::recursive_directory_iterator(CorpusDir()))
    stamps[e.path().string()] = fs::last_write_time(e.path());
  auto second = Invoke(With({"gen-data"}));
  ASSERT_EQ(second.code, kExitOk);
  EXPECT_NE(second.out.find("up to date"), std::string::npos);
  for (const auto& e : fs::recursive_directory_iterator(CorpusDir()))
    EXPECT_EQ(stamps.at(e.path().string()), fs::last_write_time(e.path())) << e.path();
}

TEST_F(CliTest, ConfigErrorsExitWithTwo) {
  auto r = Invoke(With({"gen-data", "--set", "corpus.n_train=0"}));
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("corpus.n_train"), std::string::npos);
  EXPECT_EQ(Invoke(With({"train", "--set", "train.ema_decay=1.5"})).code, kExitConfig);
  EXPECT_EQ(Invoke(With({"train", "--set", "train.unknown=1"})).code, kExitConfig);
  EXPECT_EQ(Invoke({"train", "--config", (root_ / "missing.json").string()}).code, kExitConfig);
  EXPECT_EQ(Invoke({"no-such-command"}).code, kExitConfig);
}

TEST_F(CliTest, CacheDirectoryFromEnvironment) {
  const fs::path env_root = root_ / "env_cache";
  ::setenv(kCacheEnvVar, env_root.c_str(), 1);
  EXPECT_EQ(DefaultCacheRoot(), env_root.string());
  auto r = Invoke({"gen-data", "--config", config_});
  ::unsetenv(kCacheEnvVar);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  RunConfig cfg = LoadRunConfig(config_, {});
  EXPECT_TRUE(fs::exists(fs::path(CorpusDirectory(cfg.corpus, env_root.string())) / "spec.json"));
}

TEST_F(CliTest, TrainGeneratesMissingCorpusAndLogsEveryStep) {
  ASSERT_FALSE(fs::exists(CorpusDir()));
  auto r = Invoke(With({"train"}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(CorpusDir() / "spec.json"));
  // 16 examples, batch 8, 1 epoch.
  EXPECT_EQ(CountLines(root_ / "run" / "train_log.jsonl"), 2u);
  EXPECT_TRUE(fs::exists(root_ / "run" / "best.ckpt"));
  EXPECT_TRUE(fs::exists(root_ / "run" / "last.ckpt"));
}

TEST_F(CliTest, InterruptAndResumeReproducesMetrics) {
  const std::vector<std::string> more = {"--set", "train.epochs=2"};
  auto full = With({"train"});
  full.insert(full.end(), more.begin(), more.end());
  ASSERT_EQ(Invoke(full).code, kExitOk);
  auto eval = With({"eval", "--checkpoint", (root_ / "run" / "last.ckpt").string(), "--no-estoi"});
  ASSERT_EQ(Invoke(eval).code, kExitOk);
  auto a = nlohmann::json::parse(ReadFile(root_ / "run" / "eval_test_summary.json"));

  fs::remove_all(root_ / "run");
  auto part = full;
  part.insert(part.end(), {"--stop-after-step", "3"});
  auto r = Invoke(part);
  ASSERT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("(stopped)"), std::string::npos);
  auto resume = full;
  resume.push_back("--resume");
  ASSERT_EQ(Invoke(resume).code, kExitOk);
  ASSERT_EQ(Invoke(eval).code, kExitOk);
  auto b = nlohmann::json::parse(ReadFile(root_ / "run" / "eval_test_summary.json"));
  EXPECT_NEAR(a["enhanced"]["si_sdr"]["mean"].get<double>(),
              b["enhanced"]["si_sdr"]["mean"].get<double>(), 1e-3);
  EXPECT_EQ(CountLines(root_ / "run" / "train_log.jsonl"), 4u);
}

TEST_F(CliTest, EnhanceDefaultsAndStepProbe) {
  const std::string ckpt = Checkpoint();
  const fs::path in = CorpusDir() / "test" / "test_00000_noisy.wav";
  const fs::path side = CorpusDir() / "test" / "test_00000_side.txt";
  const fs::path out = root_ / "out.wav";
  auto r = Invoke({"enhance", "--checkpoint", ckpt, "--in", in.string(), "--side-info",
                side.string(), "--out", out.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto printed = nlohmann::json::parse(
      r.out.substr(r.out.find("effective config: ") + 18, r.out.find('\n') - 18));
  EXPECT_EQ(printed["sampler"]["n_steps"], 1);
  EXPECT_EQ(printed["sampler"]["prior"], "predictor");
  EXPECT_EQ(printed["sampler"]["use_ema"], true);
  EXPECT_EQ(ReadWav(out.string()).size(), ReadWav(in.string()).size());

  r = Invoke({"enhance", "--checkpoint", ckpt, "--in", in.string(), "--side-info", side.string(),
           "--out", out.string(), "--steps", "30", "--verbose"});
  ASSERT_EQ(r.code, kExitOk);
  size_t steps = 0;
  for (size_t pos = 0; (pos = r.out.find("euler step ", pos)) != std::string::npos; ++pos) ++steps;
  EXPECT_EQ(steps, 30u);
  EXPECT_NE(r.out.find("euler step 30/30"), std::string::npos);

  EXPECT_EQ(Invoke({"separate", "--checkpoint", ckpt, "--in", in.string(), "--side-info",
                 side.string(), "--out", out.string()})
                .code,
            kExitConfig);
  EXPECT_EQ(Invoke({"enhance", "--checkpoint", ckpt, "--in", in.string(), "--side-info",
                 side.string(), "--out", out.string(), "--steps", "0"})
                .code,
            kExitConfig);
}

TEST_F(CliTest, EvalReportsAndIsDeterministic) {
  const std::string ckpt = Checkpoint();
  auto args = With({"eval", "--checkpoint", ckpt});
  ASSERT_EQ(Invoke(args).code, kExitOk);
  const auto first = ReadFile(root_ / "run" / "eval_test.jsonl");
  auto summary = nlohmann::json::parse(ReadFile(root_ / "run" / "eval_test_summary.json"));
  EXPECT_EQ(summary["n"], 3);
  for (const char* key : {"mean", "std_error", "n"})
    EXPECT_TRUE(summary["enhanced"]["si_sdr"].contains(key)) << key;
  EXPECT_TRUE(summary["enhanced"]["pesq"].is_null());
  ASSERT_EQ(Invoke(args).code, kExitOk);
  EXPECT_EQ(ReadFile(root_ / "run" / "eval_test.jsonl"), first);
  EXPECT_EQ(CountLines(root_ / "run" / "eval_test.jsonl"), 4u);

  EXPECT_EQ(Invoke(With({"eval", "--checkpoint", (root_ / "nope.ckpt").string()})).code,
            kExitRuntime);
}

TEST_F(CliTest, AblationTables) {
  const std::string ckpt = Checkpoint();
  ASSERT_EQ(Invoke(With({"ablate", "--checkpoint", ckpt, "--which", "steps", "--steps-list", "1,3",
                      "--no-estoi"}))
                .code,
            kExitOk);
  EXPECT_EQ(CountLines(root_ / "run" / "ablate_steps.jsonl"), 2u);
  EXPECT_EQ(CountLines(root_ / "run" / "ablate_steps.tsv"), 3u);
  ASSERT_EQ(Invoke(With({"ablate", "--checkpoint", ckpt, "--which", "steps", "--steps-list", "1",
                      "--no-estoi"}))
                .code,
            kExitOk);
  EXPECT_EQ(CountLines(root_ / "run" / "ablate_steps.jsonl"), 1u);

  ASSERT_EQ(Invoke(With({"ablate", "--checkpoint", ckpt, "--which", "prior", "--no-estoi"})).code,
            kExitOk);
  EXPECT_EQ(CountLines(root_ / "run" / "ablate_prior.jsonl"), 2u);

  ASSERT_EQ(Invoke(With({"ablate", "--which", "size"})).code, kExitOk);
  std::ifstream is(root_ / "run" / "ablate_size.jsonl");
  std::vector<int64_t> params;
  for (std::string line; std::getline(is, line);)
    params.push_back(nlohmann::json::parse(line).at("params").get<int64_t>());
  ASSERT_EQ(params.size(), 3u);
  EXPECT_LT(params[0], params[1]);
  EXPECT_LT(params[1], params[2]);

  EXPECT_EQ(Invoke(With({"ablate", "--which", "steps"})).code, kExitConfig);
  EXPECT_EQ(Invoke(With({"ablate", "--which", "noise"})).code, kExitConfig);
}

TEST_F(CliTest, BenchRtfWritesReport) {
  const std::string ckpt = Checkpoint();
  auto r = Invoke(With({"bench-rtf", "--checkpoint", ckpt, "--inputs", "1", "--reps", "10"}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto j = nlohmann::json::parse(ReadFile(root_ / "run" / "rtf_steps1.json"));
  EXPECT_EQ(j["per_repetition"].size(), 10u);
  EXPECT_GT(j["rtf_median"].get<double>(), 0.0);
  EXPECT_FALSE(j["device"].get<std::string>().empty());
}

TEST(CorpusStoreTest, SideInfoRoundTrip) {
  SideInfo info;
  info.frames = 3;
  info.dim = 2;
  info.values = {0.5f, -1.25f, 3.0e-7f, 1.0f / 3.0f, 42.0f, -0.0f};
  const std::string path = ::testing::TempDir() + "/side_roundtrip.txt";
  WriteSideInfo(path, info);
  auto back = ReadSideInfo(path);
  EXPECT_EQ(back.frames, 3);
  EXPECT_EQ(back.dim, 2);
  EXPECT_EQ(back.values, info.values);
  fs::remove(path);
}

TEST(CorpusStoreTest, StoredExamplesMatchGenerator) {
  CorpusSpec spec;
  spec.n_train = 2;
  spec.n_val = 1;
  spec.n_test = 1;
  spec.duration_s = 0.5;
  spec.task = Task::kSeparate;
  const fs::path root = fs::path(::testing::TempDir()) / "flowse_store_test";
  fs::remove_all(root);
  auto h = EnsureCorpus(spec, root.string());
  EXPECT_TRUE(h.generated);
  EXPECT_EQ(h.rows, 4u);
  auto stored = LoadSplit(h.dir, Split::kTrain);
  ASSERT_EQ(stored.size(), 2u);
  for (int i = 0; i < 2; ++i) {
    auto ex = MakeExample(spec, Split::kTrain, i);
    double err = 0.0;
    for (size_t k = 0; k < ex.noisy.size(); ++k) {
      err = std::max(err, std::abs(ex.noisy.samples[k] - stored[i].noisy.samples[k]));
      err = std::max(err, std::abs(ex.clean.samples[k] - stored[i].clean.samples[k]));
    }
    EXPECT_LE(err, 1.0 / 32768.0);
    EXPECT_EQ(stored[i].side_info.values, ex.side_info.values);
    EXPECT_EQ(stored[i].interferer_side_info.values, ex.interferer_side_info.values);
    EXPECT_EQ(stored[i].meta.target_identity, ex.meta.target_identity);
  }
  EXPECT_FALSE(EnsureCorpus(spec, root.string()).generated);
  fs::remove_all(root);
}

}  // namespace
}  // namespace flowse
