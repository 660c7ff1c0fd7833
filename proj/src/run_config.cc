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

#include "flowse/run_config.h"

#include <fstream>
#include <sstream>

#include "flowse/hash.h"

namespace flowse {

nlohmann::json CorpusSpecToJson(const CorpusSpec& spec) {
  return {{"n_train", spec.n_train},
          {"n_val", spec.n_val},
          {"n_test", spec.n_test},
          {"duration_s", spec.duration_s},
          {"sample_rate", spec.sample_rate},
          {"seed", spec.seed},
          {"task", TaskName(spec.task)},
          {"snr_db", spec.snr_db}};
}

CorpusSpec CorpusSpecFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("corpus: expected an object");
  CorpusSpec spec;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "n_train") spec.n_train = value.get<int>();
      else if (key == "n_val") spec.n_val = value.get<int>();
      else if (key == "n_test") spec.n_test = value.get<int>();
      else if (key == "duration_s") spec.duration_s = value.get<double>();
      else if (key == "sample_rate") spec.sample_rate = value.get<double>();
      else if (key == "seed") spec.seed = value.get<uint64_t>();
      else if (key == "task") {
        try {
          spec.task = ParseTask(value.get<std::string>());
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("corpus.task: ") + e.what());
        }
      }
      else if (key == "snr_db") spec.snr_db = value.get<double>();
      else throw ConfigError("corpus." + key + ": unknown key");
    }
    spec.Validate();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("corpus: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

nlohmann::json RunConfig::ToJson() const {
  return {{"corpus", CorpusSpecToJson(corpus)},
          {"train", train.ToJson()},
          {"model", model.ToJson()},
          {"sampler", sampler.ToJson()},
          {"output_dir", output_dir}};
}

RunConfig RunConfig::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: expected an object");
  RunConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "corpus") cfg.corpus = CorpusSpecFromJson(value);
    else if (key == "train") cfg.train = TrainConfig::FromJson(value);
    else if (key == "sampler") cfg.sampler = SamplerConfig::FromJson(value);
    else if (key == "output_dir") {
      if (!value.is_string() || value.get<std::string>().empty())
        throw ConfigError("output_dir: must be a non-empty string");
      cfg.output_dir = value.get<std::string>();
    } else if (key != "model") {
      throw ConfigError(key + ": unknown key");
    }
  }
  nlohmann::json model = j.value("model", nlohmann::json::object());
  if (model.is_object() && !model.contains("side_info_dim"))
    model["side_info_dim"] = SideInfoDim(cfg.corpus.task);
  cfg.model = ModelConfig::FromJson(model);
  if (cfg.model.side_info_dim != SideInfoDim(cfg.corpus.task))
    throw ConfigError("model.side_info_dim: must be " +
                      std::to_string(SideInfoDim(cfg.corpus.task)) + " for corpus.task " +
                      TaskName(cfg.corpus.task));
  return cfg;
}

std::string RunConfig::TrainingDigest() const {
  nlohmann::json j = {{"corpus", CorpusSpecToJson(corpus)},
                      {"train", train.ToJson()},
                      {"model", model.ToJson()}};
  return Hex64(Fnv1a64(j.dump()));
}

void ApplyOverride(nlohmann::json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "': expected section.key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;

  nlohmann::json* node = &j;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw ConfigError("override '" + assignment + "': empty path component");
    parts.push_back(part);
  }
  for (size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw ConfigError(path + ": not a section");
    node = &(*node)[parts[i]];
    if (node->is_null()) *node = nlohmann::json::object();
  }
  if (!node->is_object()) throw ConfigError(path + ": not a section");
  (*node)[parts.back()] = value;
}

RunConfig LoadRunConfig(const std::string& path, const std::vector<std::string>& overrides) {
  nlohmann::json j = nlohmann::json::object();
  if (!path.empty()) {
    std::ifstream is(path);
    if (!is) throw ConfigError(path + ": cannot open config file");
    try {
      j = nlohmann::json::parse(is, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  for (const auto& o : overrides) ApplyOverride(j, o);
  return RunConfig::FromJson(j);
}

}  // namespace flowse
