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

#include "flowse/checkpoint.h"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace flowse {

namespace {

constexpr char kMagic[8] = {'F', 'L', 'O', 'W', 'S', 'E', 'C', 'K'};

template <typename T>
void WritePod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T ReadPod(std::istream& is, const std::string& path) {
  T v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(v)))
    throw CheckpointError(path + ": truncated header");
  return v;
}

}  // namespace

torch::Tensor Checkpoint::Find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  return {};
}

bool Checkpoint::HasGroup(const std::string& prefix) const {
  for (const auto& entry : tensors)
    if (entry.first.rfind(prefix, 0) == 0) return true;
  return false;
}

void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json manifest = {{"config_digest", ckpt.manifest.config_digest},
                             {"model_config", ckpt.manifest.model_config},
                             {"epoch", ckpt.manifest.epoch},
                             {"step", ckpt.manifest.step},
                             {"ema", ckpt.manifest.ema},
                             {"extra", ckpt.manifest.extra}};
  std::vector<torch::Tensor> payload;
  nlohmann::json list = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors) {
    auto c = t.detach().to(torch::kFloat).contiguous();
    list.push_back({{"name", name}, {"shape", c.sizes().vec()}, {"offset", offset}});
    offset += static_cast<uint64_t>(c.numel()) * sizeof(float);
    payload.push_back(c);
  }
  manifest["tensors"] = list;
  const std::string text = manifest.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError(tmp + ": cannot open for writing");
    os.write(kMagic, sizeof(kMagic));
    WritePod<uint32_t>(os, kCheckpointVersion);
    WritePod<uint64_t>(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& c : payload)
      os.write(reinterpret_cast<const char*>(c.data_ptr<float>()),
               static_cast<std::streamsize>(c.numel() * sizeof(float)));
    if (!os) throw CheckpointError(tmp + ": write failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw CheckpointError(path + ": rename failed");
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError(path + ": cannot open");
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw CheckpointError(path + ": not a checkpoint file");
  const auto version = ReadPod<uint32_t>(is, path);
  if (version != kCheckpointVersion)
    throw CheckpointError(path + ": unsupported version " + std::to_string(version));
  const auto len = ReadPod<uint64_t>(is, path);
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len)))
    throw CheckpointError(path + ": truncated manifest");

  Checkpoint ckpt;
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(text);
    ckpt.manifest.config_digest = m.at("config_digest").get<std::string>();
    ckpt.manifest.model_config = m.at("model_config");
    ckpt.manifest.epoch = m.at("epoch").get<int>();
    ckpt.manifest.step = m.at("step").get<int64_t>();
    ckpt.manifest.ema = m.at("ema").get<bool>();
    ckpt.manifest.extra = m.value("extra", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path + ": bad manifest: " + e.what());
  }
  const auto base = is.tellg();
  for (const auto& entry : m.at("tensors")) {
    auto shape = entry.at("shape").get<std::vector<int64_t>>();
    auto t = torch::empty(shape, torch::kFloat);
    is.seekg(base + static_cast<std::streamoff>(entry.at("offset").get<uint64_t>()));
    if (!is.read(reinterpret_cast<char*>(t.data_ptr<float>()),
                 static_cast<std::streamsize>(t.numel() * sizeof(float))))
      throw CheckpointError(path + ": truncated tensor " + entry.at("name").get<std::string>());
    ckpt.tensors.emplace_back(entry.at("name").get<std::string>(), t);
  }
  return ckpt;
}

void LoadParameters(const Checkpoint& ckpt, const std::string& prefix, torch::nn::Module& model,
                    const ModelConfig& cfg) {
  if (ckpt.manifest.config_digest != cfg.Digest())
    throw CheckpointError("config digest mismatch: checkpoint " + ckpt.manifest.config_digest +
                          ", model " + cfg.Digest());
  torch::NoGradGuard guard;
  for (auto& [name, p] : NamedParameters(model)) {
    auto t = ckpt.Find(prefix + name);
    if (!t.defined()) throw CheckpointError("missing tensor " + prefix + name);
    if (t.sizes() != p.sizes()) throw CheckpointError("shape mismatch for " + prefix + name);
    p.copy_(t);
  }
}

TwoStageModel LoadModel(const std::string& path, bool prefer_ema) {
  auto ckpt = LoadCheckpoint(path);
  ModelConfig cfg;
  try {
    cfg = ModelConfig::FromJson(ckpt.manifest.model_config);
  } catch (const ConfigError& e) {
    throw CheckpointError(path + ": " + e.what());
  }
  TwoStageModel model(cfg);
  const bool ema = prefer_ema && ckpt.HasGroup(kEmaPrefix);
  LoadParameters(ckpt, ema ? kEmaPrefix : kParamPrefix, *model, cfg);
  model->eval();
  return model;
}

}  // namespace flowse
