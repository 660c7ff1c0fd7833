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

// Inference: draw x from N(prior mean, sigma^2 I), integrate the learned
// vector field from t = 0 to 1 with explicit Euler, invert the front-end.

#ifndef FLOWSE_SAMPLING_H_
#define FLOWSE_SAMPLING_H_

#include <torch/torch.h>

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowse/datagen.h"
#include "flowse/flowmath.h"
#include "flowse/metrics.h"
#include "flowse/networks.h"
#include "flowse/signal.h"
#include "json.hpp"

namespace flowse {

// Every network input is scaled to this RMS; outputs are scaled back.
inline constexpr double kModelInputRms = 0.1;

// Gain that brings y to kModelInputRms; 1 for silent input.
double InputGain(const TimeSignal& y);

enum class PriorMean { kPredictor, kZero };

const char* PriorMeanName(PriorMean p);
PriorMean ParsePriorMean(const std::string& s);

class SamplingError : public std::runtime_error {
 public:
  SamplingError(const std::string& what, int step)
      : std::runtime_error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

struct SamplerConfig {
  int n_steps = 1;
  PriorMean prior = PriorMean::kPredictor;
  flowmath::SigmaConfig sigma;
  // Skip the prior noise draw (x starts exactly at the prior mean).
  bool deterministic = false;
  bool use_ema = true;
  uint64_t seed = 0;

  void Validate() const;  // throws ConfigError
  nlohmann::json ToJson() const;
  static SamplerConfig FromJson(const nlohmann::json& j);
};

using FieldFn = std::function<torch::Tensor(const torch::Tensor& x, double t)>;
// Called before each step with the step index and its left-endpoint time.
using StepProbe = std::function<void(int step, double t)>;

// n_steps explicit Euler steps on the grid t_k = k / n_steps. Throws
// SamplingError naming the step whose update produced non-finite values.
torch::Tensor IntegrateEuler(torch::Tensor x, const FieldFn& field, int n_steps,
                             const StepProbe& probe = {});

class Enhancer {
 public:
  explicit Enhancer(TwoStageModel model, FrameParams frame = {}, Compression compression = {});
  static Enhancer FromCheckpoint(const std::string& path, bool use_ema = true);

  const ModelConfig& config() const { return model_->config(); }
  TwoStageModel model() const { return model_; }

  // y: (B, 2, F, T) compressed TF input; side: (B, frames, dim).
  torch::Tensor SampleTf(const torch::Tensor& y, const torch::Tensor& side,
                         const SamplerConfig& cfg, const StepProbe& probe = {}) const;

  // Waveform in, waveform of identical length out.
  TimeSignal Enhance(const TimeSignal& y, const SideInfo& side, const SamplerConfig& cfg,
                     const StepProbe& probe = {}) const;

 private:
  TwoStageModel model_;
  FrameParams frame_;
  Compression compression_;
};

struct EvalItem {
  std::string id;
  TimeSignal noisy;
  TimeSignal clean;
  SideInfo side_info;
};

EvalItem ToEvalItem(const Example& ex);

struct EvalOptions {
  bool estoi = true;
  // Added to cfg.seed per item so every item draws its own prior noise.
  bool per_item_seed = true;
};

MetricReport Evaluate(const Enhancer& enhancer, const std::vector<EvalItem>& items,
                      const SamplerConfig& cfg, EvalOptions options = {});

// Metrics of the unprocessed inputs.
MetricReport EvaluateNoisy(const std::vector<EvalItem>& items, bool estoi = true);

struct SweepPoint {
  int n_steps = 1;
  PriorMean prior = PriorMean::kPredictor;
  Aggregate si_sdr;
  Aggregate estoi;
  Aggregate si_sdr_improvement;
  double seconds = 0.0;
};

std::vector<SweepPoint> StepsSweep(const Enhancer& enhancer, const std::vector<EvalItem>& items,
                                   const std::vector<int>& steps, const SamplerConfig& base,
                                   EvalOptions options = {});

// Predictor-mean prior against zero-mean prior, all else equal.
std::vector<SweepPoint> PriorAblation(const Enhancer& enhancer,
                                      const std::vector<EvalItem>& items,
                                      const SamplerConfig& base, EvalOptions options = {});

}  // namespace flowse

#endif  // FLOWSE_SAMPLING_H_
