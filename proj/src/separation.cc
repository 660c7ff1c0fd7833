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

#include "flowse/separation.h"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace flowse {

TimeSignal Separate(const Enhancer& model, const TimeSignal& mixture,
                    const SideInfo& target_side_info, const SamplerConfig& cfg,
                    const StepProbe& probe) {
  if (model.config().side_info_dim != kSeparateSideDim)
    throw std::invalid_argument("checkpoint was not trained for separation (side-info dim " +
                                std::to_string(model.config().side_info_dim) + ")");
  return model.Enhance(mixture, target_side_info, cfg, probe);
}

SwapScores SwapConditioning(const Enhancer& model, const Example& ex, const SamplerConfig& cfg) {
  if (ex.interferer_side_info.empty())
    throw std::invalid_argument("example has no interferer record");
  const TimeSignal& target = ex.clean;
  const TimeSignal& other = ex.interference;
  const auto a = Separate(model, ex.noisy, ex.side_info, cfg);
  const auto b = Separate(model, ex.noisy, ex.interferer_side_info, cfg);
  return {SiSdr(a, target), SiSdr(a, other), SiSdr(b, target), SiSdr(b, other)};
}

SeparationSummary EvaluateSeparation(const Enhancer& model, const std::vector<Example>& examples,
                                     const SamplerConfig& cfg, bool with_shuffled) {
  SeparationSummary out;
  std::vector<double> scores, gains, shuffled;
  for (size_t i = 0; i < examples.size(); ++i) {
    const Example& ex = examples[i];
    SamplerConfig c = cfg;
    c.seed = cfg.seed + i;
    const auto x = Separate(model, ex.noisy, ex.side_info, c);
    const double s = SiSdr(x, ex.clean);
    out.report.Add(ToEvalItem(ex).id, s, Estoi(ex.clean, x));
    scores.push_back(s);
    gains.push_back(s - SiSdr(ex.noisy, ex.clean));
    out.max_energy_ratio = std::max(out.max_energy_ratio, Power(x) / Power(ex.noisy));
    if (with_shuffled && examples.size() > 1) {
      const auto& wrong = examples[(i + 1) % examples.size()].side_info;
      shuffled.push_back(SiSdr(Separate(model, ex.noisy, wrong, c), ex.clean));
    }
  }
  out.si_sdr = Summarize(scores);
  out.improvement = Summarize(gains);
  if (!shuffled.empty()) out.shuffled_si_sdr = Summarize(shuffled);
  return out;
}

}  // namespace flowse
