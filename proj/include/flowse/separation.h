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

// Target-speaker extraction: the enhancement pipeline run with a checkpoint
// trained on two-source mixtures, conditioned on the target's attribute
// record.

#ifndef FLOWSE_SEPARATION_H_
#define FLOWSE_SEPARATION_H_

#include <vector>

#include "flowse/datagen.h"
#include "flowse/metrics.h"
#include "flowse/sampling.h"

namespace flowse {

// Throws std::invalid_argument when the model was not built for separation
// side information.
TimeSignal Separate(const Enhancer& model, const TimeSignal& mixture,
                    const SideInfo& target_side_info, const SamplerConfig& cfg,
                    const StepProbe& probe = {});

// Extractions of both sources from one mixture, each scored against both
// references.
struct SwapScores {
  double target_given_target = 0.0;
  double interferer_given_target = 0.0;
  double target_given_interferer = 0.0;
  double interferer_given_interferer = 0.0;
};

SwapScores SwapConditioning(const Enhancer& model, const Example& ex, const SamplerConfig& cfg);

struct SeparationSummary {
  Aggregate si_sdr;
  Aggregate improvement;  // over the mixture
  // Each example conditioned on the next example's target record.
  Aggregate shuffled_si_sdr;
  // Largest output-to-mixture energy ratio seen.
  double max_energy_ratio = 0.0;
  MetricReport report;
};

SeparationSummary EvaluateSeparation(const Enhancer& model, const std::vector<Example>& examples,
                                     const SamplerConfig& cfg, bool with_shuffled = true);

}  // namespace flowse

#endif  // FLOWSE_SEPARATION_H_
