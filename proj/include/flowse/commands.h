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

// Command implementations behind the flowse tool. Each command body is also
// callable directly so harnesses can drive the same code paths in-process.

#ifndef FLOWSE_COMMANDS_H_
#define FLOWSE_COMMANDS_H_

#include <ostream>
#include <string>
#include <vector>

#include "flowse/corpus_store.h"
#include "flowse/metrics.h"
#include "flowse/run_config.h"
#include "flowse/sampling.h"
#include "flowse/training.h"

namespace flowse {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

// Single-threaded, deterministic math for every command.
void UseDeterministicMath();

// args excludes the program name. Output files go under the configured
// output directory; human-readable tables go to `out`, diagnostics to `err`.
int RunCommandLine(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct TrainFlags {
  bool resume = false;
  int64_t stop_after_step = -1;
};

CorpusHandle GenerateCorpus(const RunConfig& cfg, const std::string& cache_root,
                            std::ostream* log);

// Generates the corpus when missing, then trains into cfg.output_dir.
CheckpointSet TrainFromConfig(const RunConfig& cfg, const std::string& cache_root,
                              const TrainFlags& flags, std::ostream* log);

// Loads one split of the configured corpus for evaluation.
std::vector<EvalItem> LoadEvalItems(const RunConfig& cfg, const std::string& cache_root,
                                    Split split, int limit);

struct EvalSummary {
  MetricReport enhanced;
  MetricReport noisy;
  Aggregate improvement;
};

EvalSummary EvaluateItems(const Enhancer& enhancer, const std::vector<EvalItem>& items,
                          const SamplerConfig& cfg, bool estoi);

RtfReport MeasureRtf(const Enhancer& enhancer, const std::vector<EvalItem>& items,
                     const SamplerConfig& cfg, RtfOptions options);

}  // namespace flowse

#endif  // FLOWSE_COMMANDS_H_
