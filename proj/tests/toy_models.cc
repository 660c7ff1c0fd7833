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

#include "toy_models.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "flowse/commands.h"
#include "json.hpp"

namespace flowse {
namespace testing {

namespace fs = std::filesystem;

std::string ToyCacheRoot() {
  if (const char* env = std::getenv(kCacheEnvVar); env && *env) return env;
  return FLOWSE_TOY_CACHE;
}

std::vector<std::string> ToyModelNames() {
  return {"toy_enhance_small", "toy_enhance_medium", "toy_enhance_large", "toy_separate_small",
          "toy_separate_shuffled"};
}

RunConfig ToyConfig(const std::string& name) {
  RunConfig cfg = LoadRunConfig(std::string(FLOWSE_SOURCE_DIR) + "/tools/configs/" + name + ".json", {});
  cfg.output_dir =
      (fs::path(ToyCacheRoot()) / "models" / (name + "-" + cfg.TrainingDigest())).string();
  return cfg;
}

ToyModel EnsureToyModel(const std::string& name, std::ostream* log) {
  ToyModel m;
  m.name = name;
  m.config = ToyConfig(name);
  m.dir = m.config.output_dir;
  m.checkpoint = (fs::path(m.dir) / "best.ckpt").string();
  const fs::path marker = fs::path(m.dir) / "complete.json";
  if (fs::exists(marker) && fs::exists(m.checkpoint)) return m;

  UseDeterministicMath();
  if (log) *log << "training " << name << " into " << m.dir << "\n";
  TrainFlags flags;
  flags.resume = true;
  const auto res = TrainFromConfig(m.config, ToyCacheRoot(), flags, log);
  if (!res.completed) throw std::runtime_error(name + ": training stopped early");
  std::ofstream(marker) << nlohmann::json{{"steps", res.steps},
                                          {"best_val_si_sdr", res.best_val_si_sdr},
                                          {"initial_val_si_sdr", res.initial_val_si_sdr}}
                               .dump()
                        << "\n";
  return m;
}

}  // namespace testing
}  // namespace flowse
