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

#include "flowse/training.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "flowse/checkpoint.h"
#include "flowse/hash.h"
#include "flowse/nn_arrays.h"

namespace flowse {

namespace fs = std::filesystem;

void LossWeights::Validate() const {
  if (!(lambda1 >= 0.0)) throw ConfigError("train.lambda1: must be >= 0");
  if (!(lambda2 >= 0.0)) throw ConfigError("train.lambda2: must be >= 0");
  if (lambda1 == 0.0 && lambda2 == 0.0)
    throw ConfigError("train.lambda1: lambda1 and lambda2 cannot both be 0");
}

void TrainConfig::Validate() const {
  if (!(lr > 0.0)) throw ConfigError("train.lr: must be > 0");
  if (!(ema_decay > 0.0 && ema_decay < 1.0))
    throw ConfigError("train.ema_decay: must lie in (0, 1)");
  if (batch_size < 1) throw ConfigError("train.batch_size: must be >= 1");
  if (epochs < 1) throw ConfigError("train.epochs: must be >= 1");
  if (crop_frames < 16 || crop_frames % 16 != 0)
    throw ConfigError("train.crop_frames: must be a positive multiple of 16");
  if (val_examples < 0) throw ConfigError("train.val_examples: must be >= 0");
  if (!(divergence_threshold > 0.0))
    throw ConfigError("train.divergence_threshold: must be > 0");
  try {
    sigma.Validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("train.sigma: ") + e.what());
  }
  weights.Validate();
}

nlohmann::json TrainConfig::ToJson() const {
  return {{"lr", lr},
          {"ema_decay", ema_decay},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"sigma", sigma.sigma},
          {"lambda1", weights.lambda1},
          {"lambda2", weights.lambda2},
          {"seed", seed},
          {"crop_frames", crop_frames},
          {"end_to_end", end_to_end},
          {"val_examples", val_examples},
          {"divergence_threshold", divergence_threshold},
          {"shuffle_side_info", shuffle_side_info}};
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("train: expected an object");
  TrainConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "lr") cfg.lr = value.get<double>();
      else if (key == "ema_decay") cfg.ema_decay = value.get<double>();
      else if (key == "batch_size") cfg.batch_size = value.get<int>();
      else if (key == "epochs") cfg.epochs = value.get<int>();
      else if (key == "sigma") cfg.sigma.sigma = value.get<double>();
      else if (key == "lambda1") cfg.weights.lambda1 = value.get<double>();
      else if (key == "lambda2") cfg.weights.lambda2 = value.get<double>();
      else if (key == "seed") cfg.seed = value.get<uint64_t>();
      else if (key == "crop_frames") cfg.crop_frames = value.get<int>();
      else if (key == "end_to_end") cfg.end_to_end = value.get<bool>();
      else if (key == "val_examples") cfg.val_examples = value.get<int>();
      else if (key == "divergence_threshold") cfg.divergence_threshold = value.get<double>();
      else if (key == "shuffle_side_info") cfg.shuffle_side_info = value.get<bool>();
      else throw ConfigError("train." + key + ": unknown key");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
  cfg.Validate();
  return cfg;
}

double CombineLosses(const LossWeights& w, double l_p, double l_cfm) {
  return w.lambda1 * l_p + w.lambda2 * l_cfm;
}

LossBreakdown LossTerms::Values() const {
  return {l_p.item<double>(), l_cfm.item<double>(), l_total.item<double>()};
}

LossTerms ComputeLosses(TwoStageModel& model, const TfBatch& batch, const TrainConfig& cfg,
                        const torch::Tensor& t, const torch::Tensor& eps) {
  using Traits = flowmath::ArrayTraits<torch::Tensor>;
  const int64_t n = batch.noisy.size(0);
  if (t.dim() != 1 || t.size(0) != n) throw std::invalid_argument("t must have one entry per example");

  auto emb = model->Encode(batch.side_info);
  auto x0_pred = model->Predict(batch.noisy, emb);
  LossTerms out;
  out.l_p = Traits::mean_square(x0_pred - batch.clean);

  auto x0 = cfg.end_to_end ? x0_pred : x0_pred.detach();
  const auto sched = flowmath::SimplifiedSchedule<torch::Tensor>(cfg.sigma);
  auto t_cpu = t.to(torch::kDouble).contiguous();
  std::vector<torch::Tensor> xt;
  for (int64_t b = 0; b < n; ++b) {
    flowmath::PathCondition<torch::Tensor> zb{x0[b], batch.clean[b]};
    xt.push_back(flowmath::FlowMap(eps[b], t_cpu[b].item<double>(), sched, zb));
  }
  auto v = model->VectorField(torch::stack(xt), t, emb);
  flowmath::PathCondition<torch::Tensor> z{x0, batch.clean};
  out.l_cfm = flowmath::CfmRegressionResidual(v, z);
  out.l_total = cfg.weights.lambda1 * out.l_p + cfg.weights.lambda2 * out.l_cfm;
  return out;
}

LossTerms ComputeLosses(TwoStageModel& model, const TfBatch& batch, const TrainConfig& cfg,
                        at::Generator& gen) {
  auto opts = batch.noisy.options();
  auto t = torch::rand({batch.noisy.size(0)}, gen, opts);
  auto eps = torch::randn(batch.noisy.sizes(), gen, opts);
  return ComputeLosses(model, batch, cfg, t, eps);
}

void EmaUpdate(std::vector<torch::Tensor>& ema, const std::vector<torch::Tensor>& params,
               double decay) {
  if (ema.size() != params.size())
    throw std::invalid_argument("EMA holds " + std::to_string(ema.size()) + " tensors, model " +
                                std::to_string(params.size()));
  torch::NoGradGuard guard;
  for (size_t i = 0; i < ema.size(); ++i) {
    if (ema[i].sizes() != params[i].sizes())
      throw std::invalid_argument("EMA tensor " + std::to_string(i) + " shape mismatch");
    ema[i].mul_(decay).add_(params[i].detach(), 1.0 - decay);
  }
}

Adam::Adam(std::vector<torch::Tensor> params, Options options)
    : params_(std::move(params)), options_(options) {
  for (const auto& p : params_) {
    m_.push_back(torch::zeros_like(p));
    v_.push_back(torch::zeros_like(p));
  }
}

void Adam::ZeroGrad() {
  for (auto& p : params_)
    if (p.grad().defined()) p.mutable_grad() = torch::Tensor();
}

void Adam::Step() {
  torch::NoGradGuard guard;
  ++steps_;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
  for (size_t i = 0; i < params_.size(); ++i) {
    const auto& g = params_[i].grad();
    if (!g.defined()) continue;
    m_[i].mul_(options_.beta1).add_(g, 1.0 - options_.beta1);
    v_[i].mul_(options_.beta2).addcmul_(g, g, 1.0 - options_.beta2);
    auto denom = (v_[i] / c2).sqrt_().add_(options_.eps);
    params_[i].addcdiv_(m_[i], denom, -options_.lr / c1);
  }
}

TrainingExample ToTrainingExample(const Example& ex) {
  TrainingExample out;
  out.noisy.assign(ex.noisy.samples.begin(), ex.noisy.samples.end());
  out.clean.assign(ex.clean.samples.begin(), ex.clean.samples.end());
  out.side_info = ex.side_info;
  out.gain = InputGain(ex.noisy);
  return out;
}

namespace {

torch::Tensor CropTf(const std::vector<float>& samples, double gain, int first, int frames) {
  TimeSignal sig;
  sig.samples.resize(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) sig.samples[i] = samples[i] * gain;
  return TfToTensor(AnalyzeFrames(sig, first, frames));
}

}  // namespace

TfBatch MakeBatch(const std::vector<TrainingExample>& data, const std::vector<size_t>& indices,
                  const std::vector<size_t>* side_source, int crop_frames, std::mt19937_64& rng) {
  const FrameParams frame;
  std::vector<torch::Tensor> noisy, clean, side;
  const int side_frames = crop_frames / kSideInfoDecimation;
  for (size_t idx : indices) {
    const auto& ex = data.at(idx);
    const auto& info = data.at(side_source ? (*side_source)[idx] : idx).side_info;
    const int total = NumFrames(ex.noisy.size(), frame);
    if (total < crop_frames)
      throw std::invalid_argument("example shorter than the training crop");
    const int max_k = (total - crop_frames) / kSideInfoDecimation;
    const int k = std::uniform_int_distribution<int>(0, max_k)(rng);
    const int first = k * kSideInfoDecimation;
    noisy.push_back(CropTf(ex.noisy, ex.gain, first, crop_frames));
    clean.push_back(CropTf(ex.clean, ex.gain, first, crop_frames));
    auto s = SideInfoToTensor(info);
    const int avail = std::min<int>(side_frames, info.frames - k);
    auto rows = s.narrow(0, k, avail);
    if (avail < side_frames)
      rows = torch::cat({rows, rows.narrow(0, avail - 1, 1).expand({side_frames - avail, s.size(1)})});
    side.push_back(rows);
  }
  return {torch::stack(noisy), torch::stack(clean), torch::stack(side)};
}

uint64_t StepSeed(uint64_t seed, int64_t step) {
  return SplitMix64(SplitMix64(seed) ^ static_cast<uint64_t>(step));
}

std::vector<size_t> EpochPermutation(uint64_t seed, int epoch, size_t n) {
  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(StepSeed(seed ^ 0xe90c000000000000ULL, epoch));
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

namespace {

struct RunState {
  TwoStageModel model{nullptr};
  std::vector<torch::Tensor> params;
  std::vector<std::string> names;
  std::vector<torch::Tensor> ema;
  std::unique_ptr<Adam> adam;
  int64_t step = 0;
  double best = -std::numeric_limits<double>::infinity();
  double initial = 0.0;
};

Checkpoint Snapshot(const RunState& st, const ModelConfig& mc, const TrainConfig& cfg,
                    int epoch) {
  Checkpoint ckpt;
  ckpt.manifest.config_digest = mc.Digest();
  ckpt.manifest.model_config = mc.ToJson();
  ckpt.manifest.epoch = epoch;
  ckpt.manifest.step = st.step;
  ckpt.manifest.ema = true;
  ckpt.manifest.extra = {{"train_config", cfg.ToJson()},
                         {"adam_steps", st.adam->steps()},
                         {"best_val_si_sdr", st.best},
                         {"initial_val_si_sdr", st.initial}};
  for (size_t i = 0; i < st.params.size(); ++i) {
    ckpt.tensors.emplace_back(kParamPrefix + st.names[i], st.params[i]);
    ckpt.tensors.emplace_back(kEmaPrefix + st.names[i], st.ema[i]);
    ckpt.tensors.emplace_back(kAdamMPrefix + st.names[i], st.adam->first_moments()[i]);
    ckpt.tensors.emplace_back(kAdamVPrefix + st.names[i], st.adam->second_moments()[i]);
  }
  return ckpt;
}

void Restore(const Checkpoint& ckpt, const ModelConfig& mc, const TrainConfig& cfg,
             RunState* st) {
  const auto& saved = ckpt.manifest.extra.at("train_config");
  for (const char* key : {"batch_size", "seed", "crop_frames", "lr", "shuffle_side_info"})
    if (saved.at(key) != cfg.ToJson().at(key))
      throw ConfigError(std::string("train.") + key + ": differs from the checkpoint being resumed");
  LoadParameters(ckpt, kParamPrefix, *st->model, mc);
  torch::NoGradGuard guard;
  for (size_t i = 0; i < st->params.size(); ++i) {
    st->ema[i].copy_(ckpt.Find(kEmaPrefix + st->names[i]));
    st->adam->first_moments()[i].copy_(ckpt.Find(kAdamMPrefix + st->names[i]));
    st->adam->second_moments()[i].copy_(ckpt.Find(kAdamVPrefix + st->names[i]));
  }
  st->adam->set_steps(ckpt.manifest.extra.at("adam_steps").get<int64_t>());
  st->step = ckpt.manifest.step;
  st->best = ckpt.manifest.extra.at("best_val_si_sdr").get<double>();
  st->initial = ckpt.manifest.extra.at("initial_val_si_sdr").get<double>();
}

double Validate(const RunState& st, const ModelConfig& mc, const std::vector<EvalItem>& val,
                int limit) {
  TwoStageModel eval_model(mc);
  {
    torch::NoGradGuard guard;
    auto p = eval_model->parameters();
    for (size_t i = 0; i < p.size(); ++i) p[i].copy_(st.ema[i]);
  }
  Enhancer enhancer(eval_model);
  std::vector<EvalItem> subset(val.begin(),
                               val.begin() + (limit > 0 ? std::min<size_t>(limit, val.size())
                                                        : val.size()));
  SamplerConfig sc;
  EvalOptions eo;
  eo.estoi = false;
  return Evaluate(enhancer, subset, sc, eo).SiSdrSummary().mean;
}

}  // namespace

CheckpointSet Train(const std::vector<TrainingExample>& train,
                    const std::vector<EvalItem>& val, const TrainConfig& cfg,
                    const ModelConfig& model_cfg, const TrainOptions& options) {
  cfg.Validate();
  model_cfg.Validate();
  if (train.empty()) throw ConfigError("corpus.n_train: training split is empty");
  if (val.empty()) throw ConfigError("corpus.n_val: validation split is empty");
  if (train.front().side_info.dim != model_cfg.side_info_dim)
    throw ConfigError("model.side_info_dim: corpus provides " +
                      std::to_string(train.front().side_info.dim));
  if (options.output_dir.empty()) throw ConfigError("output_dir: must be set");
  fs::create_directories(options.output_dir);

  CheckpointSet out;
  out.best = (fs::path(options.output_dir) / "best.ckpt").string();
  out.last = (fs::path(options.output_dir) / "last.ckpt").string();
  out.log = (fs::path(options.output_dir) / "train_log.jsonl").string();

  RunState st;
  st.model = TwoStageModel(model_cfg, cfg.seed);
  st.model->train();
  for (auto& [name, p] : NamedParameters(*st.model)) {
    st.names.push_back(name);
    st.params.push_back(p);
    st.ema.push_back(p.detach().clone());
  }
  Adam::Options ao;
  ao.lr = cfg.lr;
  st.adam = std::make_unique<Adam>(st.params, ao);

  const bool resuming = options.resume && fs::exists(out.last);
  if (resuming) {
    Restore(LoadCheckpoint(out.last), model_cfg, cfg, &st);
  } else {
    st.initial = Validate(st, model_cfg, val, cfg.val_examples);
    st.best = st.initial;
    SaveCheckpoint(out.best, Snapshot(st, model_cfg, cfg, 0));
  }
  out.initial_val_si_sdr = st.initial;
  if (options.progress)
    *options.progress << (resuming ? "resuming at step " + std::to_string(st.step)
                                   : "initial validation si_sdr " + std::to_string(st.initial))
                      << "\n";

  std::ofstream log(out.log, resuming ? std::ios::app : std::ios::trunc);
  if (!log) throw std::runtime_error(out.log + ": cannot open for writing");

  const size_t batch = std::min<size_t>(cfg.batch_size, train.size());
  const int64_t per_epoch = static_cast<int64_t>(train.size() / batch);
  const int64_t total = per_epoch * cfg.epochs;
  std::vector<size_t> side_source;
  if (cfg.shuffle_side_info) {
    auto perm = EpochPermutation(cfg.seed ^ 0x51de000000000000ULL, 0, train.size());
    side_source.resize(train.size());
    for (size_t i = 0; i < perm.size(); ++i) side_source[perm[i]] = perm[(i + 1) % perm.size()];
  }
  const auto start = std::chrono::steady_clock::now();
  std::vector<size_t> perm;
  int perm_epoch = -1;
  bool saved_once = resuming;

  while (st.step < total) {
    if (st.step == options.stop_after_step) {
      SaveCheckpoint(out.last, Snapshot(st, model_cfg, cfg, static_cast<int>(st.step / per_epoch)));
      break;
    }
    const int epoch = static_cast<int>(st.step / per_epoch);
    const int64_t pos = st.step % per_epoch;
    if (epoch != perm_epoch) {
      perm = EpochPermutation(cfg.seed, epoch, train.size());
      perm_epoch = epoch;
    }
    const uint64_t step_seed = StepSeed(cfg.seed, st.step);
    std::mt19937_64 rng(step_seed);
    std::vector<size_t> idx(perm.begin() + pos * batch, perm.begin() + (pos + 1) * batch);
    auto tf = MakeBatch(train, idx, cfg.shuffle_side_info ? &side_source : nullptr,
                        cfg.crop_frames, rng);
    auto gen = at::make_generator<at::CPUGeneratorImpl>(step_seed);
    LossTerms losses;
    LossBreakdown values;
    try {
      losses = ComputeLosses(st.model, tf, cfg, gen);
      values = losses.Values();
    } catch (const NonFiniteError& e) {
      throw TrainingDivergedError(std::string(e.what()) + " at step " + std::to_string(st.step),
                                  st.step, saved_once ? out.last : out.best);
    }
    if (!std::isfinite(values.l_total) || values.l_total > cfg.divergence_threshold)
      throw TrainingDivergedError("loss " + std::to_string(values.l_total) + " at step " +
                                      std::to_string(st.step) + " (batch " +
                                      std::to_string(pos) + ")",
                                  st.step, saved_once ? out.last : out.best);
    st.adam->ZeroGrad();
    losses.l_total.backward();
    st.adam->Step();
    EmaUpdate(st.ema, st.params, cfg.ema_decay);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log << nlohmann::json{{"step", st.step},          {"epoch", epoch},
                          {"l_p", values.l_p},        {"l_cfm", values.l_cfm},
                          {"l_total", values.l_total}, {"lr", cfg.lr},
                          {"wall_clock", wall}}
               .dump()
        << "\n";
    ++st.step;

    const bool epoch_end = st.step % per_epoch == 0;
    if (epoch_end) {
      const double score = Validate(st, model_cfg, val, cfg.val_examples);
      log.flush();
      if (options.progress)
        *options.progress << "epoch " << epoch + 1 << "/" << cfg.epochs << " step " << st.step
                          << " l_total " << values.l_total << " val si_sdr " << score << " ("
                          << wall << " s)\n";
      if (score > st.best) {
        st.best = score;
        SaveCheckpoint(out.best, Snapshot(st, model_cfg, cfg, epoch + 1));
      }
    }
    if (epoch_end) {
      SaveCheckpoint(out.last, Snapshot(st, model_cfg, cfg, static_cast<int>(st.step / per_epoch)));
      saved_once = true;
    }
  }
  out.steps = st.step;
  out.epochs_completed = static_cast<int>(st.step / per_epoch);
  out.completed = st.step >= total;
  out.best_val_si_sdr = st.best;
  return out;
}

CheckpointSet Train(const CorpusSpec& spec, const TrainConfig& cfg, const ModelConfig& model_cfg,
                    const TrainOptions& options) {
  spec.Validate();
  std::vector<TrainingExample> train;
  for (int i = 0; i < spec.n_train; ++i)
    train.push_back(ToTrainingExample(MakeExample(spec, Split::kTrain, i)));
  std::vector<EvalItem> val;
  const int n_val = cfg.val_examples > 0 ? std::min(cfg.val_examples, spec.n_val) : spec.n_val;
  for (int i = 0; i < n_val; ++i) val.push_back(ToEvalItem(MakeExample(spec, Split::kVal, i)));
  return Train(train, val, cfg, model_cfg, options);
}

}  // namespace flowse
