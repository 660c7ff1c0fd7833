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

#include "flowse/corpus_store.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <unistd.h>

#include "flowse/wav.h"
#include "json.hpp"

namespace flowse {

namespace fs = std::filesystem;

namespace {

nlohmann::json SpecJson(const CorpusSpec& spec) {
  return {{"n_train", spec.n_train}, {"n_val", spec.n_val},     {"n_test", spec.n_test},
          {"duration_s", spec.duration_s}, {"sample_rate", spec.sample_rate},
          {"seed", spec.seed},       {"task", TaskName(spec.task)}, {"snr_db", spec.snr_db}};
}

bool IsComplete(const fs::path& dir, const std::string& hash) {
  std::ifstream is(dir / "spec.json");
  if (!is) return false;
  try {
    auto j = nlohmann::json::parse(is);
    return j.value("hash", "") == hash && j.value("complete", false);
  } catch (const nlohmann::json::exception&) {
    return false;
  }
}

std::string ExampleId(Split split, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%05d", SplitName(split), index);
  return buf;
}

}  // namespace

std::string DefaultCacheRoot() {
  if (const char* env = std::getenv(kCacheEnvVar); env && *env) return env;
  if (const char* home = std::getenv("HOME"); home && *home)
    return (fs::path(home) / ".cache" / "flowse").string();
  return "flowse_cache";
}

std::string CorpusDirectory(const CorpusSpec& spec, const std::string& root) {
  return (fs::path(root) / spec.Hash()).string();
}

void WriteSideInfo(const std::string& path, const SideInfo& info) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error(path + ": cannot open for writing");
  std::fprintf(f, "%d %d\n", info.frames, info.dim);
  for (int r = 0; r < info.frames; ++r)
    for (int d = 0; d < info.dim; ++d)
      std::fprintf(f, "%.9g%c", info.at(r, d), d + 1 == info.dim ? '\n' : ' ');
  if (std::fclose(f) != 0) throw std::runtime_error(path + ": write failed");
}

SideInfo ReadSideInfo(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error(path + ": cannot open side information");
  SideInfo info;
  if (!(is >> info.frames >> info.dim) || info.frames <= 0 || info.dim <= 0)
    throw std::runtime_error(path + ": bad side information header");
  info.values.resize(static_cast<size_t>(info.frames) * info.dim);
  for (auto& v : info.values)
    if (!(is >> v)) throw std::runtime_error(path + ": truncated side information");
  return info;
}

CorpusHandle EnsureCorpus(const CorpusSpec& spec, const std::string& root,
                          std::ostream* progress) {
  spec.Validate();
  const std::string hash = spec.Hash();
  const fs::path dir = CorpusDirectory(spec, root);
  const size_t rows = static_cast<size_t>(spec.n_train) + spec.n_val + spec.n_test;
  if (IsComplete(dir, hash)) return {dir.string(), false, rows};

  fs::create_directories(root);
  const fs::path tmp = fs::path(root) / (hash + ".tmp" + std::to_string(::getpid()));
  fs::remove_all(tmp);
  std::ofstream manifest;
  fs::create_directories(tmp);
  manifest.open(tmp / "manifest.jsonl");
  for (Split split : {Split::kTrain, Split::kVal, Split::kTest}) {
    const fs::path sub = tmp / SplitName(split);
    fs::create_directories(sub);
    for (int i = 0; i < spec.Count(split); ++i) {
      const Example ex = MakeExample(spec, split, i);
      const std::string id = ExampleId(split, i);
      const std::string rel = std::string(SplitName(split)) + "/" + id;
      WriteWav((tmp / (rel + "_noisy.wav")).string(), ex.noisy);
      WriteWav((tmp / (rel + "_clean.wav")).string(), ex.clean);
      WriteSideInfo((tmp / (rel + "_side.txt")).string(), ex.side_info);
      nlohmann::json row = {{"id", id},
                            {"split", SplitName(split)},
                            {"index", i},
                            {"noisy", rel + "_noisy.wav"},
                            {"clean", rel + "_clean.wav"},
                            {"side_info", rel + "_side.txt"},
                            {"target_identity", ex.meta.target_identity},
                            {"snr_db", ex.meta.snr_db},
                            {"noise_gain", ex.meta.noise_gain},
                            {"level_scale", ex.meta.level_scale}};
      if (spec.task == Task::kSeparate) {
        WriteSideInfo((tmp / (rel + "_other_side.txt")).string(), ex.interferer_side_info);
        row["interferer_side_info"] = rel + "_other_side.txt";
        row["interferer_identity"] = ex.meta.interferer_identity;
      } else {
        row["noise_kind"] = NoiseKindName(ex.meta.noise_kind);
      }
      manifest << row.dump() << "\n";
    }
    if (progress) *progress << "generated " << spec.Count(split) << " " << SplitName(split)
                            << " examples\n";
  }
  manifest.close();
  if (!manifest) throw std::runtime_error((tmp / "manifest.jsonl").string() + ": write failed");
  {
    std::ofstream os(tmp / "spec.json");
    os << nlohmann::json{{"spec", SpecJson(spec)}, {"hash", hash}, {"complete", true},
                         {"rows", rows}}
              .dump(2)
       << "\n";
  }
  fs::remove_all(dir);
  fs::rename(tmp, dir);
  return {dir.string(), true, rows};
}

void ForEachExample(const std::string& dir, Split split,
                    const std::function<void(Example&&)>& fn) {
  const fs::path base(dir);
  std::ifstream spec_file(base / "spec.json");
  if (!spec_file) throw std::runtime_error(dir + ": not a corpus directory");
  const auto spec = nlohmann::json::parse(spec_file).at("spec");
  const Task task = ParseTask(spec.at("task").get<std::string>());
  std::ifstream manifest(base / "manifest.jsonl");
  std::string line;
  while (std::getline(manifest, line)) {
    const auto row = nlohmann::json::parse(line);
    if (row.at("split").get<std::string>() != SplitName(split)) continue;
    Example ex;
    ex.meta.split = split;
    ex.meta.index = row.at("index").get<int>();
    ex.meta.task = task;
    ex.meta.target_identity = row.value("target_identity", -1);
    ex.meta.interferer_identity = row.value("interferer_identity", -1);
    ex.meta.snr_db = row.value("snr_db", 0.0);
    ex.meta.noise_gain = row.value("noise_gain", 0.0);
    ex.meta.level_scale = row.value("level_scale", 1.0);
    if (row.contains("noise_kind"))
      ex.meta.noise_kind = ParseNoiseKind(row.at("noise_kind").get<std::string>());
    ex.noisy = ReadWav((base / row.at("noisy").get<std::string>()).string());
    ex.clean = ReadWav((base / row.at("clean").get<std::string>()).string());
    ex.interference = ex.noisy;
    for (size_t i = 0; i < ex.interference.size(); ++i)
      ex.interference.samples[i] -= ex.clean.samples[i];
    ex.side_info = ReadSideInfo((base / row.at("side_info").get<std::string>()).string());
    if (row.contains("interferer_side_info"))
      ex.interferer_side_info =
          ReadSideInfo((base / row.at("interferer_side_info").get<std::string>()).string());
    fn(std::move(ex));
  }
}

std::vector<Example> LoadSplit(const std::string& dir, Split split) {
  std::vector<Example> out;
  ForEachExample(dir, split, [&](Example&& ex) { out.push_back(std::move(ex)); });
  return out;
}

}  // namespace flowse
