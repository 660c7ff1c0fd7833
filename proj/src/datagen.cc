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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "flowse/hash.h"

namespace flowse {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int UniformInt(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

void ScaleToRms(std::vector<double>& x, double target) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  const double rms = std::sqrt(acc / std::max<size_t>(1, x.size()));
  if (rms <= 0.0) return;
  for (double& v : x) v *= target / rms;
}

// Second-order band-pass (constant peak gain), direct form I.
class BandPass {
 public:
  BandPass(double center, double q, double rate) {
    const double w0 = kTwoPi * center / rate;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    b0_ = alpha / a0;
    b2_ = -alpha / a0;
    a1_ = -2.0 * std::cos(w0) / a0;
    a2_ = (1.0 - alpha) / a0;
  }
  double Step(double x) {
    const double y = b0_ * x + b2_ * x2_ - a1_ * y1_ - a2_ * y2_;
    x2_ = x1_;
    x1_ = x;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double b0_, b2_, a1_, a2_;
  double x1_ = 0, x2_ = 0, y1_ = 0, y2_ = 0;
};

struct IdentityTraits {
  double f0_median;
  double formant[3];
  double bandwidth[3];
  double tilt_hz;
};

IdentityTraits TraitsFor(int identity) {
  std::mt19937_64 rng(SplitMix64(0x5eed0000ULL + static_cast<uint64_t>(identity)));
  IdentityTraits t;
  t.f0_median = IdentityMedianF0(identity);
  t.formant[0] = Uniform(rng, 350.0, 800.0);
  t.formant[1] = Uniform(rng, 1000.0, 2200.0);
  t.formant[2] = Uniform(rng, 2400.0, 3300.0);
  t.bandwidth[0] = Uniform(rng, 80.0, 140.0);
  t.bandwidth[1] = Uniform(rng, 100.0, 200.0);
  t.bandwidth[2] = Uniform(rng, 150.0, 300.0);
  t.tilt_hz = Uniform(rng, 1500.0, 3000.0);
  return t;
}

std::vector<double> OnePoleSmooth(const std::vector<double>& x, double tau_s,
                                  double rate) {
  std::vector<double> y(x.size());
  const double a = std::exp(-1.0 / (tau_s * rate));
  double state = x.empty() ? 0.0 : x[0];
  for (size_t i = 0; i < x.size(); ++i) {
    state = a * state + (1.0 - a) * x[i];
    y[i] = state;
  }
  return y;
}

}  // namespace

const char* TaskName(Task t) {
  return t == Task::kEnhance ? "enhance" : "separate";
}

Task ParseTask(const std::string& s) {
  if (s == "enhance") return Task::kEnhance;
  if (s == "separate") return Task::kSeparate;
  throw std::invalid_argument("unknown task '" + s + "' (expected enhance|separate)");
}

const char* NoiseKindName(NoiseKind k) {
  switch (k) {
    case NoiseKind::kWhite: return "white";
    case NoiseKind::kBabble: return "babble";
    case NoiseKind::kTonal: return "tonal";
    case NoiseKind::kImpulsive: return "impulsive";
  }
  return "?";
}

NoiseKind ParseNoiseKind(const std::string& s) {
  if (s == "white") return NoiseKind::kWhite;
  if (s == "babble") return NoiseKind::kBabble;
  if (s == "tonal") return NoiseKind::kTonal;
  if (s == "impulsive") return NoiseKind::kImpulsive;
  throw std::invalid_argument("unknown noise kind '" + s + "'");
}

const char* SplitName(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

int CorpusSpec::Count(Split split) const {
  switch (split) {
    case Split::kTrain: return n_train;
    case Split::kVal: return n_val;
    case Split::kTest: return n_test;
  }
  return 0;
}

void CorpusSpec::Validate() const {
  auto fail = [](const std::string& field, const std::string& constraint) {
    throw std::invalid_argument("corpus." + field + ": " + constraint);
  };
  if (n_train <= 0) fail("n_train", "must be > 0");
  if (n_val <= 0) fail("n_val", "must be > 0");
  if (n_test <= 0) fail("n_test", "must be > 0");
  if (!(sample_rate > 0.0)) fail("sample_rate", "must be > 0");
  if (!(duration_s * sample_rate >= 510.0))
    fail("duration_s", "must cover at least one 510-sample analysis window");
  if (std::isnan(snr_db)) fail("snr_db", "must be a number");
}

std::string CorpusSpec::Hash() const {
  std::ostringstream os;
  os.precision(17);
  os << "n_train=" << n_train << ";n_val=" << n_val << ";n_test=" << n_test
     << ";duration_s=" << duration_s << ";sample_rate=" << sample_rate
     << ";seed=" << seed << ";task=" << TaskName(task) << ";snr_db=" << snr_db
     << ";generator=1";
  return Hex64(Fnv1a64(os.str()));
}

int SideInfoDim(Task task) {
  return task == Task::kEnhance ? kEnhanceSideDim : kSeparateSideDim;
}

int SideInfoFrames(size_t num_samples) {
  const int frames = NumFrames(num_samples, FrameParams{});
  return (frames + kSideInfoDecimation - 1) / kSideInfoDecimation;
}

double IdentityMedianF0(int identity) {
  const double golden = 0.6180339887498949;
  double frac = 0.5 + identity * golden;
  frac -= std::floor(frac);
  return 90.0 + 170.0 * frac;
}

std::vector<int> IdentityPool(Split split) {
  int base = 0, count = 64;
  if (split == Split::kVal) {
    base = 1000;
    count = 16;
  } else if (split == Split::kTest) {
    base = 2000;
    count = 16;
  }
  std::vector<int> pool(count);
  for (int i = 0; i < count; ++i) pool[i] = base + i;
  return pool;
}

SpeechLike GenSpeechLike(int identity, std::mt19937_64& rng, double duration_s,
                         double sample_rate) {
  const auto n = static_cast<size_t>(std::lround(duration_s * sample_rate));
  const IdentityTraits id = TraitsFor(identity);

  // Syllable plan: per-syllable amplitude, F0 offset, formant shifts and an
  // optional fricative onset.
  std::vector<double> env(n, 0.0), f0_offset(n, 0.0), fricative(n, 0.0);
  std::vector<double> formant_scale[3];
  for (auto& f : formant_scale) f.assign(n, 1.0);
  size_t pos = 0;
  while (pos < n) {
    const double rate = Uniform(rng, 2.0, 8.0);
    const auto len = static_cast<size_t>(sample_rate / rate);
    const bool pause = Uniform(rng, 0.0, 1.0) < 0.15;
    const double amp = pause ? 0.0 : Uniform(rng, 0.4, 1.0);
    const double offset = Uniform(rng, -0.06, 0.06);
    double scale[3];
    for (double& s : scale) s = 1.0 + Uniform(rng, -0.15, 0.15);
    const bool fric = !pause && Uniform(rng, 0.0, 1.0) < 0.3;
    for (size_t i = 0; i < len && pos + i < n; ++i) {
      const double p = static_cast<double>(i) / len;
      const double s = std::sin(std::numbers::pi * p);
      env[pos + i] = amp * s * s;
      f0_offset[pos + i] = offset;
      for (int j = 0; j < 3; ++j) formant_scale[j][pos + i] = scale[j];
      if (fric && p < 0.3) fricative[pos + i] = amp * std::sin(std::numbers::pi * p / 0.3);
    }
    pos += len;
  }
  f0_offset = OnePoleSmooth(f0_offset, 0.03, sample_rate);
  for (auto& f : formant_scale) f = OnePoleSmooth(f, 0.02, sample_rate);

  SpeechLike out;
  out.identity = identity;
  out.envelope = env;
  out.f0.resize(n);
  const double vib_rate = Uniform(rng, 0.5, 1.5);
  const double vib_phase = Uniform(rng, 0.0, kTwoPi);
  for (size_t i = 0; i < n; ++i) {
    const double t = i / sample_rate;
    out.f0[i] = id.f0_median *
                (1.0 + f0_offset[i] + 0.04 * std::sin(kTwoPi * vib_rate * t + vib_phase));
  }

  const int harmonics =
      std::max(1, static_cast<int>(7000.0 / (id.f0_median * 1.12)));
  std::vector<double> phase(harmonics);
  for (double& p : phase) p = Uniform(rng, 0.0, kTwoPi);
  std::vector<double> amp(harmonics, 0.0);
  std::vector<double> x(n, 0.0);
  constexpr size_t kBlock = 16;
  for (size_t i = 0; i < n; ++i) {
    const double f0 = out.f0[i];
    if (i % kBlock == 0) {
      for (int k = 0; k < harmonics; ++k) {
        const double f = (k + 1) * f0;
        double h = 0.02;
        for (int j = 0; j < 3; ++j) {
          const double fc = id.formant[j] * formant_scale[j][i];
          const double d = (f - fc) / id.bandwidth[j];
          h += (j == 0 ? 1.0 : j == 1 ? 0.7 : 0.4) / (1.0 + d * d);
        }
        amp[k] = f < 0.45 * sample_rate ? h * std::exp(-f / id.tilt_hz * 0.5) : 0.0;
      }
    }
    double acc = 0.0;
    for (int k = 0; k < harmonics; ++k) {
      phase[k] += kTwoPi * (k + 1) * f0 / sample_rate;
      if (phase[k] > kTwoPi) phase[k] -= kTwoPi;
      acc += amp[k] * std::sin(phase[k]);
    }
    x[i] = env[i] * acc;
  }

  // Fricative-like band-limited noise bursts around the upper formants.
  BandPass bp(Uniform(rng, 3000.0, 5000.0), 2.0, sample_rate);
  std::normal_distribution<double> normal(0.0, 1.0);
  double voiced_rms = 0.0;
  for (double v : x) voiced_rms += v * v;
  voiced_rms = std::sqrt(voiced_rms / std::max<size_t>(1, n));
  for (size_t i = 0; i < n; ++i) {
    const double w = bp.Step(normal(rng));
    x[i] += 0.6 * voiced_rms * fricative[i] * w;
  }

  ScaleToRms(x, Uniform(rng, 0.05, 0.15));
  out.signal = TimeSignal(std::move(x), sample_rate);
  return out;
}

TimeSignal GenNoise(NoiseKind kind, std::mt19937_64& rng, double duration_s,
                    double sample_rate) {
  const auto n = static_cast<size_t>(std::lround(duration_s * sample_rate));
  std::vector<double> x(n, 0.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  switch (kind) {
    case NoiseKind::kWhite:
      for (double& v : x) v = normal(rng);
      break;
    case NoiseKind::kBabble: {
      const int talkers = UniformInt(rng, 4, 6);
      for (int k = 0; k < talkers; ++k) {
        const int identity = 3000 + UniformInt(rng, 0, 99);
        SpeechLike s = GenSpeechLike(identity, rng, duration_s, sample_rate);
        for (size_t i = 0; i < n; ++i) x[i] += s.signal.samples[i];
      }
      break;
    }
    case NoiseKind::kTonal: {
      const int tones = UniformInt(rng, 2, 4);
      for (int k = 0; k < tones; ++k) {
        const double f = std::exp(Uniform(rng, std::log(150.0), std::log(3000.0)));
        const double vib_rate = Uniform(rng, 0.5, 3.0);
        const double am_rate = Uniform(rng, 0.2, 2.0);
        const double am_phase = Uniform(rng, 0.0, kTwoPi);
        double phase = Uniform(rng, 0.0, kTwoPi);
        for (size_t i = 0; i < n; ++i) {
          const double t = i / sample_rate;
          const double fi = f * (1.0 + 0.01 * std::sin(kTwoPi * vib_rate * t));
          phase += kTwoPi * fi / sample_rate;
          const double am = 0.7 + 0.3 * std::sin(kTwoPi * am_rate * t + am_phase);
          double v = 0.0;
          for (int h = 1; h <= 3; ++h)
            if (h * fi < 0.45 * sample_rate) v += std::sin(h * phase) / (1 << (h - 1));
          x[i] += am * v;
        }
      }
      break;
    }
    case NoiseKind::kImpulsive: {
      for (double& v : x) v = 0.01 * normal(rng);
      const double rate = Uniform(rng, 4.0, 15.0);
      std::exponential_distribution<double> gap(rate);
      double t = gap(rng);
      while (t < duration_s) {
        const auto start = static_cast<size_t>(t * sample_rate);
        const double amp = Uniform(rng, 0.3, 1.0) * (Uniform(rng, 0.0, 1.0) < 0.5 ? -1 : 1);
        const double tau = Uniform(rng, 0.001, 0.008) * sample_rate;
        const auto len = static_cast<size_t>(5.0 * tau);
        for (size_t i = 0; i < len && start + i < n; ++i)
          x[start + i] += amp * std::exp(-static_cast<double>(i) / tau) * normal(rng);
        t += gap(rng);
      }
      break;
    }
  }
  ScaleToRms(x, 0.1);
  return TimeSignal(std::move(x), sample_rate);
}

SideInfo EnvelopeSideInfo(const TimeSignal& clean) {
  const TFRepresentation tf = Analyze(clean, FrameParams{}, Compression::None());
  SideInfo info;
  info.dim = kEnvelopeBands;
  info.frames = (tf.num_frames + kSideInfoDecimation - 1) / kSideInfoDecimation;
  info.values.assign(static_cast<size_t>(info.frames) * info.dim, 0.0f);
  const int band_width = tf.num_bins / kEnvelopeBands;
  std::vector<double> cells(info.values.size(), 0.0);
  double max_log = -1e300;
  for (int r = 0; r < info.frames; ++r) {
    const int f_lo = r * kSideInfoDecimation;
    const int f_hi = std::min(tf.num_frames, f_lo + kSideInfoDecimation);
    for (int b = 0; b < kEnvelopeBands; ++b) {
      double acc = 0.0;
      for (int m = f_lo; m < f_hi; ++m)
        for (int k = b * band_width; k < (b + 1) * band_width; ++k)
          acc += std::norm(tf.at(k, m));
      const double p = acc / ((f_hi - f_lo) * band_width);
      const double lg = std::log10(p + 1e-12);
      cells[static_cast<size_t>(r) * info.dim + b] = lg;
      max_log = std::max(max_log, lg);
    }
  }
  for (size_t i = 0; i < cells.size(); ++i)
    info.values[i] = static_cast<float>(std::max(-8.0, cells[i] - max_log));
  return info;
}

SideInfo SourceSideInfo(const SpeechLike& source) {
  const FrameParams fp;
  const size_t n = source.signal.size();
  SideInfo info;
  info.dim = kSeparateSideDim;
  info.frames = SideInfoFrames(n);
  info.values.assign(static_cast<size_t>(info.frames) * info.dim, 0.0f);
  const int slot = ((source.identity % kIdentitySlots) + kIdentitySlots) % kIdentitySlots;
  const long span = static_cast<long>(kSideInfoDecimation) * fp.hop;
  for (int r = 0; r < info.frames; ++r) {
    const long lo = std::max(0L, r * span - fp.hop / 2);
    const long hi = std::min(static_cast<long>(n), (r + 1) * span - fp.hop / 2);
    double f0 = 0.0, env = 0.0;
    long count = 0;
    for (long i = lo; i < hi; ++i, ++count) {
      f0 += source.f0[i];
      env += source.envelope[i];
    }
    if (count > 0) {
      f0 /= count;
      env /= count;
    }
    const bool voiced = env > 0.05;
    float* row = &info.values[static_cast<size_t>(r) * info.dim];
    row[0] = voiced ? static_cast<float>(std::log2(f0 / 150.0)) : 0.0f;
    row[1] = voiced ? 1.0f : 0.0f;
    row[2 + slot] = 1.0f;
  }
  return info;
}

std::mt19937_64 ExampleRng(const CorpusSpec& spec, Split split, int index) {
  uint64_t s = SplitMix64(spec.seed);
  s = SplitMix64(s ^ ((static_cast<uint64_t>(split) + 1) * 0xa24baed4963ee407ULL));
  s = SplitMix64(s ^ (static_cast<uint64_t>(index) * 0x9fb21c651e98df25ULL));
  return std::mt19937_64(s);
}

Example MakeExample(const CorpusSpec& spec, Split split, int index) {
  spec.Validate();
  if (index < 0 || index >= spec.Count(split))
    throw std::out_of_range("example index " + std::to_string(index) +
                            " outside " + SplitName(split) + " split of size " +
                            std::to_string(spec.Count(split)));
  auto rng = ExampleRng(spec, split, index);
  const auto pool = IdentityPool(split);

  Example ex;
  ex.meta.split = split;
  ex.meta.index = index;
  ex.meta.task = spec.task;
  ex.meta.snr_db = spec.snr_db;
  ex.meta.target_identity = pool[UniformInt(rng, 0, static_cast<int>(pool.size()) - 1)];
  SpeechLike target =
      GenSpeechLike(ex.meta.target_identity, rng, spec.duration_s, spec.sample_rate);
  ex.clean = target.signal;

  TimeSignal interference;
  if (spec.task == Task::kEnhance) {
    ex.meta.noise_kind = static_cast<NoiseKind>(UniformInt(rng, 0, 3));
    interference = GenNoise(ex.meta.noise_kind, rng, spec.duration_s, spec.sample_rate);
  } else {
    int other = ex.meta.target_identity;
    while (other == ex.meta.target_identity)
      other = pool[UniformInt(rng, 0, static_cast<int>(pool.size()) - 1)];
    ex.meta.interferer_identity = other;
    SpeechLike second = GenSpeechLike(other, rng, spec.duration_s, spec.sample_rate);
    ex.interferer_side_info = SourceSideInfo(second);
    interference = second.signal;
  }
  ex.meta.noise_gain = GainForSnr(ex.clean, interference, spec.snr_db);
  for (double& v : interference.samples) v *= ex.meta.noise_gain;

  double peak = 0.0;
  for (size_t i = 0; i < ex.clean.size(); ++i) {
    peak = std::max({peak, std::abs(ex.clean.samples[i]),
                     std::abs(interference.samples[i]),
                     std::abs(ex.clean.samples[i] + interference.samples[i])});
  }
  if (peak > 0.95) {
    ex.meta.level_scale = 0.95 / peak;
    for (double& v : ex.clean.samples) v *= ex.meta.level_scale;
    for (double& v : interference.samples) v *= ex.meta.level_scale;
  }
  ex.interference = std::move(interference);
  ex.noisy = ex.clean;
  for (size_t i = 0; i < ex.noisy.size(); ++i)
    ex.noisy.samples[i] += ex.interference.samples[i];

  ex.side_info = spec.task == Task::kEnhance ? EnvelopeSideInfo(ex.clean)
                                             : SourceSideInfo(target);
  return ex;
}

}  // namespace flowse
