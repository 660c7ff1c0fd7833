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

// The single structured configuration shared by every command: corpus,
// training, model and sampler sections plus an output directory. Unknown
// keys are rejected at every level; "section.key=value" overrides are
// applied before validation.

#ifndef FLOWSE_RUN_CONFIG_H_
#define FLOWSE_RUN_CONFIG_H_

#include <string>
#include <vector>

#include "flowse/datagen.h"
#include "flowse/networks.h"
#include "flowse/sampling.h"
#include "flowse/training.h"
#include "json.hpp"

namespace flowse {

nlohmann::json CorpusSpecToJson(const CorpusSpec& spec);
CorpusSpec CorpusSpecFromJson(const nlohmann::json& j);

struct RunConfig {
  CorpusSpec corpus;
  TrainConfig train;
  ModelConfig model;
  SamplerConfig sampler;
  std::string output_dir = "flowse_run";

  nlohmann::json ToJson() const;
  // Omitted model.side_info_dim follows corpus.task.
  static RunConfig FromJson(const nlohmann::json& j);
  // Digest of the fields that determine a trained checkpoint.
  std::string TrainingDigest() const;
};

// Sets the value at a dotted path; the value is parsed as JSON when possible
// and kept as a string otherwise.
void ApplyOverride(nlohmann::json& j, const std::string& assignment);

// Reads `path` (empty: all defaults), applies overrides, validates.
RunConfig LoadRunConfig(const std::string& path, const std::vector<std::string>& overrides);

}  // namespace flowse

#endif  // FLOWSE_RUN_CONFIG_H_
