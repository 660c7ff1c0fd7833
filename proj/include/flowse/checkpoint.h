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

// Checkpoint archive: an 8-byte magic, a format version, a JSON manifest and
// the raw little-endian float32 payload of every named tensor.
//
//   "FLOWSECK" | u32 version | u64 manifest bytes | manifest | payload

#ifndef FLOWSE_CHECKPOINT_H_
#define FLOWSE_CHECKPOINT_H_

#include <torch/torch.h>

#include <stdexcept>
#include <string>

#include "flowse/networks.h"
#include "json.hpp"

namespace flowse {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr uint32_t kCheckpointVersion = 1;

// Name prefixes of the tensor groups stored in one archive.
inline constexpr const char* kParamPrefix = "param/";
inline constexpr const char* kEmaPrefix = "ema/";
inline constexpr const char* kAdamMPrefix = "adam_m/";
inline constexpr const char* kAdamVPrefix = "adam_v/";

struct CheckpointManifest {
  std::string config_digest;
  nlohmann::json model_config;
  int epoch = 0;
  int64_t step = 0;
  bool ema = false;
  // Free-form training state (RNG position, best validation score, ...).
  nlohmann::json extra = nlohmann::json::object();
};

struct Checkpoint {
  CheckpointManifest manifest;
  NamedTensors tensors;

  // Undefined tensor when absent.
  torch::Tensor Find(const std::string& name) const;
  bool HasGroup(const std::string& prefix) const;
};

// Writes to a sibling temporary file and renames it into place.
void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::string& path);

// Copies group `prefix` into the parameters of `model`; throws
// CheckpointError on digest mismatch or a missing/mis-shaped tensor.
void LoadParameters(const Checkpoint& ckpt, const std::string& prefix, torch::nn::Module& model,
                    const ModelConfig& cfg);

// Builds a model from the archived config and loads EMA weights when
// requested and present, plain weights otherwise.
TwoStageModel LoadModel(const std::string& path, bool prefer_ema);

}  // namespace flowse

#endif  // FLOWSE_CHECKPOINT_H_
