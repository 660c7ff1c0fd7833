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

#include "flowse/sampling.h"

#include <chrono>

#include "flowse/checkpoint.h"
#include "flowse/nn_arrays.h"

namespace flowse {

double InputGain(const TimeSignal& y) {
  const double rms = Rms(y);
  return rms > 1e-8 ? kModelInputRms / rms : 1.0;
}

const char* PriorMeanName(PriorMean p) {
  return p == PriorMean::kPredictor ? "predictor" : "zero";
}

PriorMean ParsePriorMean(const std::string& s) {
  if (s == "predictor") return PriorMean::kPredictor;
  if (s == "zero") return PriorMean::kZero;
  throw ConfigError("sampler.prior: expected predictor or zero, got '" + s + "'");
}

void SamplerConfig::Validate() const {
  if (n_steps < 1) throw ConfigError("sampler.n_steps: must be >= 1");
  try {
    sigma.Validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("sampler.sigma: ") + e.what());
  }
}

nlohmann::json SamplerConfig::ToJson() const {
  return {{"n_steps", n_steps},          {"prior", PriorMeanName(prior)},
          {"sigma", sigma.sigma},        {"deterministic", deterministic},
          {"use_ema", use_ema},          {"seed", seed}};
}

SamplerConfig SamplerConfig::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("sampler: expected an object");
  SamplerConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "n_steps") cfg.n_steps = value.get<int>();
      else if (key == "prior") cfg.prior = ParsePriorMean(value.get<std::string>());
      else if (key == "sigma") cfg.sigma.sigma = value.get<double>();
      else if (key == "deterministic") cfg.deterministic = value.get<bool>();
      else if (key == "use_ema") cfg.use_ema = value.get<bool>();
      else if (key == "seed") cfg.seed = value.get<uint64_t>();
      else throw ConfigError("sampler." + key + ": unknown key");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("sampler: ") + e.what());
  }
  cfg.Validate();
  return cfg;
}

torch::Tensor IntegrateEuler(torch::Tensor x, const FieldFn& field, int n_steps,
                             const StepProbe& probe) {
  if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
  const double h = 1.0 / n_steps;
  for (int k = 0; k < n_steps; ++k) {
    const double t = k * h;
    if (probe) probe(k, t);
    x = x + field(x, t) * h;
    if (!flowmath::ArrayTraits<torch::Tensor>::all_finite(x))
      throw SamplingError("non-finite state after Euler step " + std::to_string(k), k);
  }
  return x;
}

Enhancer::Enhancer(TwoStageModel model, FrameParams frame, Compression compression)
    : model_(std::move(model)), frame_(frame), compression_(compression) {
  model_->eval();
}

Enhancer Enhancer::FromCheckpoint(const std::string& path, bool use_ema) {
  return Enhancer(LoadModel(path, use_ema));
}

torch::Tensor Enhancer::SampleTf(const torch::Tensor& y, const torch::Tensor& side,
                                 const SamplerConfig& cfg, const StepProbe& probe) const {
  cfg.Validate();
  if (!flowmath::ArrayTraits<torch::Tensor>::all_finite(y))
    throw std::invalid_argument("noisy input contains non-finite values");
  if (side.dim() != 3 || side.size(0) != y.size(0) || side.size(2) != config().side_info_dim)
    throw std::invalid_argument("side information does not match the model");
  torch::NoGradGuard guard;
  // Parameters are only read here.
  TwoStageModelImpl& model = *model_.ptr();
  auto emb = model.Encode(side);
  torch::Tensor mean = cfg.prior == PriorMean::kPredictor ? model.Predict(y, emb)
                                                          : torch::zeros_like(y);
  torch::Tensor x = mean;
  if (!cfg.deterministic) {
    auto gen = at::make_generator<at::CPUGeneratorImpl>(cfg.seed);
    x = mean + cfg.sigma.sigma * torch::randn(y.sizes(), gen, y.options());
  }
  const int64_t batch = y.size(0);
  return IntegrateEuler(
      x,
      [&](const torch::Tensor& state, double t) {
        return model.VectorField(state, torch::full({batch}, t, y.options()), emb);
      },
      cfg.n_steps, probe);
}

TimeSignal Enhancer::Enhance(const TimeSignal& y, const SideInfo& side, const SamplerConfig& cfg,
                             const StepProbe& probe) const {
  y.Validate();
  if (side.dim != config().side_info_dim)
    throw std::invalid_argument("side information has dimension " + std::to_string(side.dim) +
                                ", model expects " + std::to_string(config().side_info_dim));
  if (side.frames != SideInfoFrames(y.size()))
    throw std::invalid_argument("side information has " + std::to_string(side.frames) +
                                " frames, signal needs " +
                                std::to_string(SideInfoFrames(y.size())));
  const double gain = InputGain(y);
  TimeSignal scaled = y;
  for (auto& s : scaled.samples) s *= gain;
  auto tf = Analyze(scaled, frame_, compression_);
  auto out = SampleTf(TfToTensor(tf).unsqueeze(0), SideInfoToTensor(side).unsqueeze(0), cfg,
                      probe);
  TensorToTf(out.squeeze(0), &tf);
  TimeSignal x = Synthesize(tf);
  for (auto& s : x.samples) s /= gain;
  return x;
}

EvalItem ToEvalItem(const Example& ex) {
  return {std::string(SplitName(ex.meta.split)) + "_" + std::to_string(ex.meta.index), ex.noisy,
          ex.clean, ex.side_info};
}

MetricReport Evaluate(const Enhancer& enhancer, const std::vector<EvalItem>& items,
                      const SamplerConfig& cfg, EvalOptions options) {
  MetricReport report;
  for (size_t i = 0; i < items.size(); ++i) {
    SamplerConfig c = cfg;
    if (options.per_item_seed) c.seed = cfg.seed + i;
    const TimeSignal x = enhancer.Enhance(items[i].noisy, items[i].side_info, c);
    report.Add(items[i].id, SiSdr(x, items[i].clean),
               options.estoi ? Estoi(items[i].clean, x) : kNotComputed);
  }
  return report;
}

MetricReport EvaluateNoisy(const std::vector<EvalItem>& items, bool estoi) {
  MetricReport report;
  for (const auto& item : items)
    report.Add(item.id, SiSdr(item.noisy, item.clean),
               estoi ? Estoi(item.clean, item.noisy) : kNotComputed);
  return report;
}

namespace {

SweepPoint RunPoint(const Enhancer& enhancer, const std::vector<EvalItem>& items,
                    const std::vector<double>& baseline, const SamplerConfig& cfg,
                    EvalOptions options) {
  const auto start = std::chrono::steady_clock::now();
  auto report = Evaluate(enhancer, items, cfg, options);
  SweepPoint p;
  p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  p.n_steps = cfg.n_steps;
  p.prior = cfg.prior;
  p.si_sdr = report.SiSdrSummary();
  p.estoi = report.EstoiSummary();
  std::vector<double> gains;
  for (size_t i = 0; i < items.size(); ++i) gains.push_back(report.records[i].si_sdr - baseline[i]);
  p.si_sdr_improvement = Summarize(gains);
  return p;
}

std::vector<double> Baseline(const std::vector<EvalItem>& items) {
  std::vector<double> out;
  for (const auto& item : items) out.push_back(SiSdr(item.noisy, item.clean));
  return out;
}

}  // namespace

std::vector<SweepPoint> StepsSweep(const Enhancer& enhancer, const std::vector<EvalItem>& items,
                                   const std::vector<int>& steps, const SamplerConfig& base,
                                   EvalOptions options) {
  const auto baseline = Baseline(items);
  std::vector<SweepPoint> out;
  for (int n : steps) {
    SamplerConfig cfg = base;
    cfg.n_steps = n;
    out.push_back(RunPoint(enhancer, items, baseline, cfg, options));
  }
  return out;
}

std::vector<SweepPoint> PriorAblation(const Enhancer& enhancer,
                                      const std::vector<EvalItem>& items,
                                      const SamplerConfig& base, EvalOptions options) {
  const auto baseline = Baseline(items);
  std::vector<SweepPoint> out;
  for (PriorMean prior : {PriorMean::kPredictor, PriorMean::kZero}) {
    SamplerConfig cfg = base;
    cfg.prior = prior;
    out.push_back(RunPoint(enhancer, items, baseline, cfg, options));
  }
  return out;
}

}  // namespace flowse
