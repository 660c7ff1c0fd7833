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

// Joint optimization of the predictor, the vector-field network and the
// conditioning encoder under L_total = lambda1 * L_p + lambda2 * L_cfm.

#ifndef FLOWSE_TRAINING_H_
#define FLOWSE_TRAINING_H_

#include <torch/torch.h>

#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowse/datagen.h"
#include "flowse/flowmath.h"
#include "flowse/networks.h"
#include "flowse/sampling.h"
#include "json.hpp"

namespace flowse {

class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(const std::string& what, int64_t step, std::string last_good)
      : std::runtime_error(what), step_(step), last_good_(std::move(last_good)) {}
  int64_t step() const { return step_; }
  // Path of the last checkpoint written before the failure; empty if none.
  const std::string& last_good_checkpoint() const { return last_good_; }

 private:
  int64_t step_;
  std::string last_good_;
};

struct LossWeights {
  double lambda1 = 0.5;
  double lambda2 = 0.5;

  void Validate() const;
};

struct TrainConfig {
  double lr = 1e-4;
  double ema_decay = 0.999;
  int batch_size = 16;
  int epochs = 20;
  flowmath::SigmaConfig sigma;
  LossWeights weights;
  uint64_t seed = 0;
  // Training crops, in TF frames; a multiple of 16 and of the side-info
  // decimation.
  int crop_frames = 64;
  // Let L_cfm gradients reach the predictor through x0.
  bool end_to_end = false;
  // Validation examples scored per epoch; 0 scores the whole split.
  int val_examples = 0;
  double divergence_threshold = 1e6;
  // Conditioning ablation: pair every example with another example's side
  // information.
  bool shuffle_side_info = false;

  void Validate() const;  // throws ConfigError
  nlohmann::json ToJson() const;
  static TrainConfig FromJson(const nlohmann::json& j);
};

struct LossBreakdown {
  double l_p = 0.0;
  double l_cfm = 0.0;
  double l_total = 0.0;
};

double CombineLosses(const LossWeights& w, double l_p, double l_cfm);

// One minibatch in the compressed TF domain.
struct TfBatch {
  torch::Tensor noisy;      // y, (B, 2, F, T)
  torch::Tensor clean;      // x1, (B, 2, F, T)
  torch::Tensor side_info;  // (B, frames, dim)
};

struct LossTerms {
  torch::Tensor l_p, l_cfm, l_total;
  LossBreakdown Values() const;
};

// t: (B) path times; eps: standard normal of the TF shape.
LossTerms ComputeLosses(TwoStageModel& model, const TfBatch& batch, const TrainConfig& cfg,
                        const torch::Tensor& t, const torch::Tensor& eps);
// Draws t ~ U[0, 1] per example and eps ~ N(0, I) from gen.
LossTerms ComputeLosses(TwoStageModel& model, const TfBatch& batch, const TrainConfig& cfg,
                        at::Generator& gen);

// ema <- d * ema + (1 - d) * param, elementwise.
void EmaUpdate(std::vector<torch::Tensor>& ema, const std::vector<torch::Tensor>& params,
               double decay);

// Adaptive-moment optimizer with checkpointable state. Parameters without a
// gradient are left untouched.
class Adam {
 public:
  struct Options {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam(std::vector<torch::Tensor> params, Options options);

  void ZeroGrad();
  void Step();

  int64_t steps() const { return steps_; }
  void set_steps(int64_t n) { steps_ = n; }
  std::vector<torch::Tensor>& first_moments() { return m_; }
  std::vector<torch::Tensor>& second_moments() { return v_; }
  const Options& options() const { return options_; }

 private:
  std::vector<torch::Tensor> params_, m_, v_;
  Options options_;
  int64_t steps_ = 0;
};

// Waveform examples kept in memory for cropping; float storage halves the
// footprint of the default corpus.
struct TrainingExample {
  std::vector<float> noisy;
  std::vector<float> clean;
  SideInfo side_info;
  double gain = 1.0;  // InputGain of the noisy signal
};

TrainingExample ToTrainingExample(const Example& ex);

// Random crops of consecutive examples in `order`, analyzed with the model
// front-end. rng draws crop offsets; side_order (optional) picks the side
// information source for each example.
TfBatch MakeBatch(const std::vector<TrainingExample>& data, const std::vector<size_t>& indices,
                  const std::vector<size_t>* side_source, int crop_frames, std::mt19937_64& rng);

struct TrainOptions {
  std::string output_dir;
  bool resume = false;
  // Stop (after checkpointing) once this many steps have run; -1 = never.
  int64_t stop_after_step = -1;
  // Progress lines; null for silence.
  std::ostream* progress = nullptr;
};

struct CheckpointSet {
  std::string best;
  std::string last;
  std::string log;
  double best_val_si_sdr = 0.0;
  double initial_val_si_sdr = 0.0;
  int64_t steps = 0;
  int epochs_completed = 0;
  bool completed = false;
};

CheckpointSet Train(const std::vector<TrainingExample>& train,
                    const std::vector<EvalItem>& val, const TrainConfig& cfg,
                    const ModelConfig& model_cfg, const TrainOptions& options);

// Generates the corpus splits and trains on them.
CheckpointSet Train(const CorpusSpec& spec, const TrainConfig& cfg, const ModelConfig& model_cfg,
                    const TrainOptions& options);

// Per-step and per-epoch seeds derived from the run seed.
uint64_t StepSeed(uint64_t seed, int64_t step);
std::vector<size_t> EpochPermutation(uint64_t seed, int epoch, size_t n);

}  // namespace flowse

#endif  // FLOWSE_TRAINING_H_
