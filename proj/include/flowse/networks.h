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

// Learnable components: the light U-net in three size variants, the
// conditioning encoder with time-local cross-attention, and the two-stage
// predictor + vector-field model built from them.
//
// Size variants differ only in block inventory:
//   large   two 3x3 convolutions per residual block, four bottleneck blocks
//   medium  one convolution per block, four bottleneck blocks
//   small   one convolution per block, the outer two bottleneck blocks

#ifndef FLOWSE_NETWORKS_H_
#define FLOWSE_NETWORKS_H_

#include <torch/torch.h>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "flowse/datagen.h"
#include "flowse/signal.h"
#include "json.hpp"

namespace flowse {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::runtime_error {
 public:
  explicit NonFiniteError(const std::string& where)
      : std::runtime_error("non-finite activations in " + where), where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

enum class SizeVariant { kSmall, kMedium, kLarge };

const char* SizeVariantName(SizeVariant v);
SizeVariant ParseSizeVariant(const std::string& s);

// Index of the bottleneck in attention_levels.
inline constexpr int kBottleneckLevel = 4;

struct ModelConfig {
  SizeVariant size_variant = SizeVariant::kSmall;
  int base_channels = 8;
  std::vector<int> channel_multipliers = {1, 2, 4, 4};
  int levels = 4;
  std::vector<int> attention_levels = {2, 3, kBottleneckLevel};
  int conditioning_dim = 16;
  int side_info_dim = kEnhanceSideDim;
  bool duplicate_convs = false;
  int level4_inner_blocks = 2;
  bool pad_input = true;

  // Canonical block inventory for a size variant.
  static ModelConfig ForVariant(SizeVariant variant, int base_channels = 8);

  int time_embedding_dim() const { return 4 * base_channels; }
  int channels(int level) const { return base_channels * channel_multipliers.at(level); }

  // Throws ConfigError naming the field and the violated constraint.
  void Validate() const;
  std::string Digest() const;
  nlohmann::json ToJson() const;
  // Missing keys keep defaults; unknown keys are rejected.
  static ModelConfig FromJson(const nlohmann::json& j);
};

// GroupNorm group count used throughout: up to 8 groups of >= 2 channels.
int NormGroups(int channels);

// Sinusoidal features of t in [0, 1], shape (B, dim).
torch::Tensor SinusoidalTimeFeatures(const torch::Tensor& t, int dim);

// Linear resampling of (B, frames, D) embeddings along time.
torch::Tensor InterpolateFrames(const torch::Tensor& emb, int64_t frames);

class ResBlockImpl : public torch::nn::Module {
 public:
  ResBlockImpl(int in_channels, int out_channels, int time_dim, bool duplicate_conv);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& temb);

 private:
  torch::nn::GroupNorm norm1_{nullptr}, norm2_{nullptr};
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, skip_{nullptr};
  torch::nn::Linear time_proj_{nullptr};
};
TORCH_MODULE(ResBlock);

// Each TF position attends over conditioning frames with a learned
// distance penalty -softplus(slope) * |frame - key frame|, so alignment is
// available from initialization.
class CrossAttentionImpl : public torch::nn::Module {
 public:
  CrossAttentionImpl(int channels, int cond_dim);
  // h: (B, C, F, T); emb: (B, T, D), already at this level's frame rate.
  torch::Tensor forward(const torch::Tensor& h, const torch::Tensor& emb);

 private:
  torch::nn::GroupNorm norm_{nullptr};
  torch::nn::Conv2d query_{nullptr}, out_{nullptr};
  torch::nn::Linear key_{nullptr}, value_{nullptr};
  torch::Tensor slope_;
};
TORCH_MODULE(CrossAttention);

// Maps per-frame side information (B, frames, side_dim) to a conditioning
// embedding (B, frames, cond_dim). Replicate padding keeps constant inputs
// constant in time.
class ConditioningEncoderImpl : public torch::nn::Module {
 public:
  ConditioningEncoderImpl(int side_dim, int cond_dim);
  torch::Tensor forward(const torch::Tensor& side_info);

 private:
  torch::nn::Conv1d conv0_{nullptr}, conv1_{nullptr};
};
TORCH_MODULE(ConditioningEncoder);

class UNetImpl : public torch::nn::Module {
 public:
  UNetImpl(const ModelConfig& cfg, int in_channels, int out_channels, bool use_time,
           std::string name);

  // x: (B, in, F, T); t: (B) or undefined; emb: (B, frames, D) at one frame
  // per kSideInfoDecimation TF frames, or undefined. Returns (B, out, F, T).
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& t,
                        const torch::Tensor& emb);

  void set_check_finite(bool on) { check_finite_ = on; }

 private:
  bool HasAttention(int level) const;
  void CheckFinite(const torch::Tensor& h, const char* where) const;

  ModelConfig cfg_;
  bool use_time_;
  std::string name_;
  bool check_finite_ = true;
  torch::nn::Conv2d conv_in_{nullptr}, conv_out_{nullptr};
  torch::nn::GroupNorm norm_out_{nullptr};
  torch::nn::Linear time0_{nullptr}, time1_{nullptr};
  torch::nn::ModuleList down_, bottleneck_, up_;
  std::vector<CrossAttention> down_attention_;
  CrossAttention bottleneck_attention_{nullptr};
};
TORCH_MODULE(UNet);

// P_theta and G_phi sharing one conditioning encoder.
class TwoStageModelImpl : public torch::nn::Module {
 public:
  explicit TwoStageModelImpl(const ModelConfig& cfg, uint64_t init_seed = 0);

  const ModelConfig& config() const { return cfg_; }

  torch::Tensor Encode(const torch::Tensor& side_info);
  // y + U_theta(y, f_v): the untrained predictor is the identity.
  torch::Tensor Predict(const torch::Tensor& y, const torch::Tensor& emb);
  torch::Tensor VectorField(const torch::Tensor& x, const torch::Tensor& t,
                            const torch::Tensor& emb);

  ConditioningEncoder encoder() { return encoder_; }
  UNet predictor() { return predictor_; }
  UNet refiner() { return refiner_; }

 private:
  ModelConfig cfg_;
  ConditioningEncoder encoder_{nullptr};
  UNet predictor_{nullptr}, refiner_{nullptr};
};
TORCH_MODULE(TwoStageModel);

int64_t ParameterCount(const torch::nn::Module& m);

using NamedTensors = std::vector<std::pair<std::string, torch::Tensor>>;

// Parameters in registration order, which is stable for a given config.
NamedTensors NamedParameters(const torch::nn::Module& m);

// (2, bins, frames) float tensor of a TF representation.
torch::Tensor TfToTensor(const TFRepresentation& tf);
void TensorToTf(const torch::Tensor& t, TFRepresentation* tf);
// (frames, dim) float tensor.
torch::Tensor SideInfoToTensor(const SideInfo& info);

}  // namespace flowse

#endif  // FLOWSE_NETWORKS_H_
