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

// Deterministic synthetic corpora: speech-like harmonic sources, four noise
// families, and enhancement / two-source separation examples with their
// conditioning side information. Every example is a pure function of the
// corpus spec and its (split, index).

#ifndef FLOWSE_DATAGEN_H_
#define FLOWSE_DATAGEN_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "flowse/signal.h"

namespace flowse {

enum class Task { kEnhance, kSeparate };
enum class NoiseKind { kWhite, kBabble, kTonal, kImpulsive };
enum class Split { kTrain, kVal, kTest };

const char* TaskName(Task t);
Task ParseTask(const std::string& s);
const char* NoiseKindName(NoiseKind k);
NoiseKind ParseNoiseKind(const std::string& s);
const char* SplitName(Split s);

struct CorpusSpec {
  int n_train = 2000;
  int n_val = 200;
  int n_test = 200;
  double duration_s = 2.0;
  double sample_rate = 16000.0;
  uint64_t seed = 1234;
  Task task = Task::kEnhance;
  double snr_db = 0.0;

  int Count(Split split) const;
  // Throws std::invalid_argument naming the offending field.
  void Validate() const;
  // Stable hex digest over every field.
  std::string Hash() const;
};

// Per-frame conditioning record, row-major (frames x dim).
struct SideInfo {
  int frames = 0;
  int dim = 0;
  std::vector<float> values;

  float at(int frame, int d) const { return values[static_cast<size_t>(frame) * dim + d]; }
  bool empty() const { return values.empty(); }
};

// Side-information geometry shared by generator and networks.
inline constexpr int kSideInfoDecimation = 4;  // TF frames per record frame
inline constexpr int kEnvelopeBands = 8;
inline constexpr int kIdentitySlots = 16;
inline constexpr int kEnhanceSideDim = kEnvelopeBands;
inline constexpr int kSeparateSideDim = 2 + kIdentitySlots;

int SideInfoDim(Task task);
// Record frames covering `num_samples` of audio under the default front-end.
int SideInfoFrames(size_t num_samples);

struct SpeechLike {
  TimeSignal signal;
  int identity = 0;
  std::vector<double> f0;        // per-sample instantaneous F0, Hz
  std::vector<double> envelope;  // per-sample syllabic envelope in [0, 1]
};

// Median F0 assigned to a speaker identity, Hz.
double IdentityMedianF0(int identity);

// Identity pools per split; train and test pools are disjoint.
std::vector<int> IdentityPool(Split split);

SpeechLike GenSpeechLike(int identity, std::mt19937_64& rng,
                         double duration_s = 2.0, double sample_rate = 16000.0);

TimeSignal GenNoise(NoiseKind kind, std::mt19937_64& rng,
                    double duration_s = 2.0, double sample_rate = 16000.0);

// Coarse band log-envelope of a clean waveform (enhancement conditioning):
// kEnvelopeBands equal-width bands, kSideInfoDecimation-frame averages,
// log10 power relative to the loudest cell, floored at -8.
SideInfo EnvelopeSideInfo(const TimeSignal& clean);

// Source attributes (separation conditioning): log2(F0 / 150 Hz) when
// voiced, a voicing flag, and a one-hot identity slot.
SideInfo SourceSideInfo(const SpeechLike& source);

struct ExampleMeta {
  Split split = Split::kTrain;
  int index = 0;
  Task task = Task::kEnhance;
  int target_identity = -1;
  int interferer_identity = -1;
  NoiseKind noise_kind = NoiseKind::kWhite;
  double snr_db = 0.0;
  double noise_gain = 0.0;
  double level_scale = 1.0;  // joint scale applied to keep peaks below 0.95
};

struct Example {
  TimeSignal noisy;         // y
  TimeSignal clean;         // x1 source
  TimeSignal interference;  // scaled noise or second source; noisy = clean + interference
  SideInfo side_info;       // computed from the clean target only
  SideInfo interferer_side_info;  // separation only: the other source's record
  ExampleMeta meta;
};

// Independent generator stream for one example.
std::mt19937_64 ExampleRng(const CorpusSpec& spec, Split split, int index);

Example MakeExample(const CorpusSpec& spec, Split split, int index);

}  // namespace flowse

#endif  // FLOWSE_DATAGEN_H_
