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

#include "flowse/datagen.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <set>

namespace flowse {
namespace {

// Pitch by normalized autocorrelation over 40 ms frames of voiced audio;
// the smallest lag within 90% of the best peak avoids octave jumps.
double MedianF0ByAutocorrelation(const TimeSignal& s) {
  const int frame = 640;
  const int min_lag = static_cast<int>(s.sample_rate / 400.0);
  const int max_lag = static_cast<int>(s.sample_rate / 70.0);
  const double rms = Rms(s);
  std::vector<double> estimates;
  for (size_t start = 0; start + frame + max_lag < s.size(); start += frame / 2) {
    double energy = 0.0;
    for (int i = 0; i < frame; ++i) energy += s.samples[start + i] * s.samples[start + i];
    if (std::sqrt(energy / frame) < 0.7 * rms) continue;
    std::vector<double> r(max_lag + 1, 0.0);
    double best = -1.0;
    for (int lag = min_lag; lag <= max_lag; ++lag) {
      double acc = 0.0, e2 = 0.0;
      for (int i = 0; i < frame; ++i) {
        acc += s.samples[start + i] * s.samples[start + i + lag];
        e2 += s.samples[start + i + lag] * s.samples[start + i + lag];
      }
      r[lag] = acc / std::sqrt(energy * e2 + 1e-20);
      best = std::max(best, r[lag]);
    }
    for (int lag = min_lag; lag <= max_lag; ++lag) {
      if (r[lag] >= 0.9 * best && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) {
        estimates.push_back(s.sample_rate / lag);
        break;
      }
    }
  }
  if (estimates.empty()) return 0.0;
  std::sort(estimates.begin(), estimates.end());
  return estimates[estimates.size() / 2];
}

double Kurtosis(const TimeSignal& s) {
  double m = 0.0;
  for (double v : s.samples) m += v;
  m /= s.size();
  double m2 = 0.0, m4 = 0.0;
  for (double v : s.samples) {
    const double d = (v - m) * (v - m);
    m2 += d;
    m4 += d * d;
  }
  m2 /= s.size();
  m4 /= s.size();
  return m4 / (m2 * m2);
}

TEST(SpeechLikeTest, DeterministicPerIdentityAndSeed) {
  std::mt19937_64 a(5), b(5);
  const SpeechLike x = GenSpeechLike(12, a), y = GenSpeechLike(12, b);
  EXPECT_EQ(x.signal.samples, y.signal.samples);
  EXPECT_EQ(x.f0, y.f0);
}

TEST(SpeechLikeTest, RmsWithinContract) {
  for (int id = 0; id < 20; ++id) {
    std::mt19937_64 rng(100 + id);
    const double rms = Rms(GenSpeechLike(id, rng).signal);
    EXPECT_GE(rms, 0.05);
    EXPECT_LE(rms, 0.5);
  }
}

TEST(SpeechLikeTest, DistinctIdentitiesHaveDistinctPitch) {
  std::mt19937_64 rng_a(1), rng_b(2);
  const TimeSignal a = GenSpeechLike(0, rng_a).signal;
  const TimeSignal b = GenSpeechLike(1, rng_b).signal;
  const double fa = MedianF0ByAutocorrelation(a);
  const double fb = MedianF0ByAutocorrelation(b);
  EXPECT_GT(std::abs(fa - fb), 10.0) << fa << " vs " << fb;
  EXPECT_NEAR(fa, IdentityMedianF0(0), 0.1 * IdentityMedianF0(0));
  EXPECT_NEAR(fb, IdentityMedianF0(1), 0.1 * IdentityMedianF0(1));
}

TEST(NoiseTest, WhiteSpectrumIsFlat) {
  std::mt19937_64 rng(3);
  const TimeSignal n = GenNoise(NoiseKind::kWhite, rng);
  const TFRepresentation tf = Analyze(n, FrameParams{}, Compression::None());
  const int bands = 16;
  const int width = (tf.num_bins - 1) / bands;
  std::vector<double> power(bands, 0.0);
  for (int b = 0; b < bands; ++b)
    for (int k = 1 + b * width; k < 1 + (b + 1) * width; ++k)
      for (int m = 0; m < tf.num_frames; ++m) power[b] += std::norm(tf.at(k, m));
  double mean = 0.0;
  for (double p : power) mean += p / bands;
  for (double p : power) EXPECT_LT(std::abs(10.0 * std::log10(p / mean)), 3.0);
}

TEST(NoiseTest, ImpulsiveIsHeavierTailedThanWhite) {
  std::mt19937_64 a(4), b(4);
  EXPECT_GT(Kurtosis(GenNoise(NoiseKind::kImpulsive, a)),
            Kurtosis(GenNoise(NoiseKind::kWhite, b)));
}

TEST(NoiseTest, SameSeedSameOutput) {
  for (auto kind : {NoiseKind::kWhite, NoiseKind::kBabble, NoiseKind::kTonal,
                    NoiseKind::kImpulsive}) {
    std::mt19937_64 a(9), b(9);
    EXPECT_EQ(GenNoise(kind, a).samples, GenNoise(kind, b).samples)
        << NoiseKindName(kind);
  }
}

CorpusSpec SmallSpec(Task task) {
  CorpusSpec spec;
  spec.n_train = 8;
  spec.n_val = 2;
  spec.n_test = 4;
  spec.task = task;
  return spec;
}

TEST(MakeExampleTest, MixtureHitsRequestedSnr) {
  for (double snr : {0.0, 5.0, -3.0}) {
    CorpusSpec spec = SmallSpec(Task::kEnhance);
    spec.snr_db = snr;
    for (int i = 0; i < 4; ++i) {
      const Example ex = MakeExample(spec, Split::kTrain, i);
      TimeSignal n = ex.noisy;
      for (size_t k = 0; k < n.size(); ++k) n.samples[k] -= ex.clean.samples[k];
      EXPECT_NEAR(MeasureSnrDb(ex.clean, n), snr, 1e-6);
    }
  }
}

TEST(MakeExampleTest, EnhancementNoiseIsUncorrelatedWithClean) {
  const CorpusSpec spec = SmallSpec(Task::kEnhance);
  for (int i = 0; i < 8; ++i) {
    const Example ex = MakeExample(spec, Split::kTrain, i);
    double cn = 0.0, cc = 0.0, nn = 0.0;
    for (size_t k = 0; k < ex.clean.size(); ++k) {
      const double n = ex.noisy.samples[k] - ex.clean.samples[k];
      cn += n * ex.clean.samples[k];
      cc += ex.clean.samples[k] * ex.clean.samples[k];
      nn += n * n;
    }
    EXPECT_LT(std::abs(cn / std::sqrt(cc * nn)), 0.1) << "example " << i;
  }
}

TEST(MakeExampleTest, SeparationMixtureIsExactSum) {
  const CorpusSpec spec = SmallSpec(Task::kSeparate);
  for (int i = 0; i < 4; ++i) {
    const Example ex = MakeExample(spec, Split::kTest, i);
    double residual = 0.0;
    for (size_t k = 0; k < ex.noisy.size(); ++k)
      residual = std::max(residual, std::abs(ex.noisy.samples[k] - ex.clean.samples[k] -
                                             ex.interference.samples[k]));
    EXPECT_LT(residual, 1e-9);
    EXPECT_NE(ex.meta.target_identity, ex.meta.interferer_identity);
    EXPECT_EQ(ex.side_info.dim, kSeparateSideDim);
    EXPECT_EQ(ex.interferer_side_info.frames, ex.side_info.frames);
  }
}

TEST(MakeExampleTest, RegenerationIsBitIdentical) {
  for (Task task : {Task::kEnhance, Task::kSeparate}) {
    const CorpusSpec spec = SmallSpec(task);
    for (Split split : {Split::kTrain, Split::kVal, Split::kTest}) {
      const Example a = MakeExample(spec, split, 1);
      const Example b = MakeExample(spec, split, 1);
      EXPECT_EQ(a.noisy.samples, b.noisy.samples);
      EXPECT_EQ(a.clean.samples, b.clean.samples);
      EXPECT_EQ(a.side_info.values, b.side_info.values);
    }
  }
}

TEST(MakeExampleTest, SplitsDrawFromDisjointIdentityPools) {
  const auto train = IdentityPool(Split::kTrain);
  const auto test = IdentityPool(Split::kTest);
  const auto val = IdentityPool(Split::kVal);
  std::set<int> seen(train.begin(), train.end());
  for (int id : test) EXPECT_FALSE(seen.count(id));
  for (int id : val) EXPECT_FALSE(seen.count(id));
  const CorpusSpec spec = SmallSpec(Task::kSeparate);
  for (int i = 0; i < spec.n_test; ++i) {
    const Example ex = MakeExample(spec, Split::kTest, i);
    EXPECT_FALSE(seen.count(ex.meta.target_identity));
    EXPECT_FALSE(seen.count(ex.meta.interferer_identity));
  }
}

TEST(MakeExampleTest, ExamplesSurviveTheFrontEnd) {
  const CorpusSpec spec = SmallSpec(Task::kEnhance);
  for (int i = 0; i < 3; ++i) {
    const Example ex = MakeExample(spec, Split::kVal, i % 2);
    for (const TimeSignal* s : {&ex.noisy, &ex.clean}) {
      const TimeSignal r = Synthesize(Analyze(*s));
      double err = 0.0;
      for (size_t k = 0; k < s->size(); ++k)
        err = std::max(err, std::abs(r.samples[k] - s->samples[k]));
      EXPECT_LT(err, 1e-4);
    }
  }
}

TEST(MakeExampleTest, SideInfoGeometry) {
  const Example ex = MakeExample(SmallSpec(Task::kEnhance), Split::kTrain, 0);
  EXPECT_EQ(ex.side_info.dim, kEnhanceSideDim);
  EXPECT_EQ(ex.side_info.frames, SideInfoFrames(ex.clean.size()));
  EXPECT_EQ(ex.side_info.frames, 63);
  const float top = *std::max_element(ex.side_info.values.begin(), ex.side_info.values.end());
  EXPECT_EQ(top, 0.0f);
  for (float v : ex.side_info.values) EXPECT_GE(v, -8.0f);
}

TEST(MakeExampleTest, IndexOutsideSplitIsRejected) {
  const CorpusSpec spec = SmallSpec(Task::kEnhance);
  EXPECT_THROW(MakeExample(spec, Split::kVal, 2), std::out_of_range);
}

TEST(CorpusSpecTest, ValidationNamesTheField) {
  CorpusSpec spec;
  spec.n_train = 0;
  try {
    spec.Validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("n_train"), std::string::npos);
  }
}

TEST(CorpusSpecTest, HashTracksEveryField) {
  const CorpusSpec base;
  std::set<std::string> hashes = {base.Hash()};
  CorpusSpec s = base;
  s.seed = 1;
  hashes.insert(s.Hash());
  s = base;
  s.snr_db = 5;
  hashes.insert(s.Hash());
  s = base;
  s.task = Task::kSeparate;
  hashes.insert(s.Hash());
  s = base;
  s.n_test = 7;
  hashes.insert(s.Hash());
  EXPECT_EQ(hashes.size(), 5u);
  EXPECT_EQ(base.Hash(), CorpusSpec{}.Hash());
}

}  // namespace
}  // namespace flowse
