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

#include "flowse/metrics.h"

#include <fftw3.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <numbers>
#include <ostream>
#include <thread>

#include "json.hpp"

namespace flowse {

double SiSdr(const TimeSignal& estimate, const TimeSignal& reference) {
  if (estimate.size() != reference.size())
    throw MetricError("SI-SDR: estimate and reference lengths differ");
  if (reference.size() == 0) throw MetricError("SI-SDR: empty signals");
  const size_t n = reference.size();
  const double me =
      std::accumulate(estimate.samples.begin(), estimate.samples.end(), 0.0) / n;
  const double mr =
      std::accumulate(reference.samples.begin(), reference.samples.end(), 0.0) / n;
  double dot = 0.0, ref_energy = 0.0, est_energy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double e = estimate.samples[i] - me;
    const double r = reference.samples[i] - mr;
    dot += e * r;
    ref_energy += r * r;
    est_energy += e * e;
  }
  if (ref_energy == 0.0) throw MetricError("SI-SDR: reference is all zero");
  if (est_energy == 0.0) return -kSiSdrCapDb;
  const double alpha = dot / ref_energy;
  double target = 0.0, distortion = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double t = alpha * (reference.samples[i] - mr);
    const double d = (estimate.samples[i] - me) - t;
    target += t * t;
    distortion += d * d;
  }
  if (distortion == 0.0) return kSiSdrCapDb;
  if (target == 0.0) return -kSiSdrCapDb;
  return std::clamp(10.0 * std::log10(target / distortion), -kSiSdrCapDb,
                    kSiSdrCapDb);
}

std::vector<double> ResamplePoly(const std::vector<double>& x, int up,
                                 int down) {
  if (up < 1 || down < 1) throw MetricError("resampling factors must be >= 1");
  const int g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == 1 && down == 1) return x;
  const int max_rate = std::max(up, down);
  const int half_len = 10 * max_rate;
  const int taps = 2 * half_len + 1;
  const double cutoff = 1.0 / max_rate;
  const double beta = 5.0;
  std::vector<double> h(taps);
  double sum = 0.0;
  for (int i = 0; i < taps; ++i) {
    const double m = i - half_len;
    const double arg = cutoff * m;
    const double sinc =
        m == 0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
    const double r = 2.0 * i / (taps - 1) - 1.0;
    const double kaiser = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) /
                          std::cyl_bessel_i(0.0, beta);
    h[i] = cutoff * sinc * kaiser;
    sum += h[i];
  }
  for (double& v : h) v *= up / sum;

  const long n = static_cast<long>(x.size());
  const long out_len = (n * up + down - 1) / down;
  std::vector<double> y(out_len, 0.0);
  for (long m = 0; m < out_len; ++m) {
    // y[m] = sum_k x[k] h[m*down + half_len - k*up]
    const long center = m * down + half_len;
    long k_lo = (center - (taps - 1) + up - 1) / up;
    if (center - (taps - 1) < 0) k_lo = 0;
    const long k_hi = std::min(n - 1, center / up);
    double acc = 0.0;
    for (long k = std::max(0L, k_lo); k <= k_hi; ++k) {
      const long idx = center - k * up;
      if (idx >= 0 && idx < taps) acc += x[k] * h[idx];
    }
    y[m] = acc;
  }
  return y;
}

namespace {

constexpr int kEstoiRate = 10000;
constexpr int kEstoiFrame = 256;
constexpr int kEstoiFft = 512;
constexpr int kEstoiBands = 15;
constexpr double kEstoiMinFreq = 150.0;
constexpr int kEstoiSegment = 30;
constexpr double kEstoiDynRange = 40.0;

std::vector<double> MatlabHanning(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (i + 1) / (n + 1));
  return w;
}

// Drops frames more than kEstoiDynRange dB below the loudest reference frame
// and overlap-adds the survivors of both signals.
void RemoveSilentFrames(std::vector<double>& x, std::vector<double>& y) {
  const int hop = kEstoiFrame / 2;
  const auto w = MatlabHanning(kEstoiFrame);
  std::vector<long> starts;
  for (long i = 0; i < static_cast<long>(x.size()) - kEstoiFrame; i += hop)
    starts.push_back(i);
  std::vector<double> energy(starts.size());
  double max_energy = -1e300;
  for (size_t f = 0; f < starts.size(); ++f) {
    double acc = 0.0;
    for (int i = 0; i < kEstoiFrame; ++i) {
      const double v = w[i] * x[starts[f] + i];
      acc += v * v;
    }
    energy[f] = 20.0 * std::log10(std::sqrt(acc) + 2.220446049250313e-16);
    max_energy = std::max(max_energy, energy[f]);
  }
  std::vector<long> kept;
  for (size_t f = 0; f < starts.size(); ++f)
    if (max_energy - kEstoiDynRange - energy[f] < 0.0) kept.push_back(starts[f]);
  if (kept.empty()) {
    x.clear();
    y.clear();
    return;
  }
  const size_t out_len = (kept.size() - 1) * hop + kEstoiFrame;
  std::vector<double> xs(out_len, 0.0), ys(out_len, 0.0);
  for (size_t f = 0; f < kept.size(); ++f) {
    for (int i = 0; i < kEstoiFrame; ++i) {
      xs[f * hop + i] += w[i] * x[kept[f] + i];
      ys[f * hop + i] += w[i] * y[kept[f] + i];
    }
  }
  x.swap(xs);
  y.swap(ys);
}

std::mutex& FftwPlanMutex() {
  static std::mutex m;
  return m;
}

// Band envelopes (bands x frames), row-major by band.
std::vector<double> ThirdOctaveEnvelopes(const std::vector<double>& x,
                                         int* num_frames) {
  const int hop = kEstoiFrame / 2;
  const int bins = kEstoiFft / 2 + 1;
  const auto w = MatlabHanning(kEstoiFrame);

  // One-third-octave band edges snapped to FFT bins.
  std::vector<int> lo(kEstoiBands), hi(kEstoiBands);
  auto nearest_bin = [&](double f) {
    int best = 0;
    double best_d = 1e300;
    for (int k = 0; k < bins; ++k) {
      const double d = std::abs(static_cast<double>(k) * kEstoiRate / kEstoiFft - f);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  };
  for (int b = 0; b < kEstoiBands; ++b) {
    lo[b] = nearest_bin(kEstoiMinFreq * std::pow(2.0, (2.0 * b - 1.0) / 6.0));
    hi[b] = nearest_bin(kEstoiMinFreq * std::pow(2.0, (2.0 * b + 1.0) / 6.0));
  }

  std::vector<long> starts;
  for (long i = 0; i < static_cast<long>(x.size()) - kEstoiFrame; i += hop)
    starts.push_back(i);
  *num_frames = static_cast<int>(starts.size());
  std::vector<double> env(static_cast<size_t>(kEstoiBands) * starts.size(), 0.0);
  if (starts.empty()) return env;

  double* in = fftw_alloc_real(kEstoiFft);
  fftw_complex* out = fftw_alloc_complex(bins);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(FftwPlanMutex());
    plan = fftw_plan_dft_r2c_1d(kEstoiFft, in, out, FFTW_ESTIMATE);
  }
  std::vector<double> power(bins);
  for (size_t f = 0; f < starts.size(); ++f) {
    std::fill(in, in + kEstoiFft, 0.0);
    for (int i = 0; i < kEstoiFrame; ++i) in[i] = w[i] * x[starts[f] + i];
    fftw_execute(plan);
    for (int k = 0; k < bins; ++k)
      power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    for (int b = 0; b < kEstoiBands; ++b) {
      double acc = 0.0;
      for (int k = lo[b]; k < hi[b]; ++k) acc += power[k];
      env[b * starts.size() + f] = std::sqrt(acc);
    }
  }
  {
    std::lock_guard<std::mutex> lock(FftwPlanMutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return env;
}

// Normalizes each band row of a (bands x N) segment to zero mean and unit
// norm, then each frame column likewise. Degenerate vectors become zero.
void RowColumnNormalize(std::vector<double>& seg) {
  const int n = kEstoiSegment;
  for (int b = 0; b < kEstoiBands; ++b) {
    double* row = &seg[b * n];
    const double mean = std::accumulate(row, row + n, 0.0) / n;
    double norm = 0.0;
    for (int i = 0; i < n; ++i) {
      row[i] -= mean;
      norm += row[i] * row[i];
    }
    norm = std::sqrt(norm);
    for (int i = 0; i < n; ++i) row[i] = norm > 1e-300 ? row[i] / norm : 0.0;
  }
  for (int i = 0; i < n; ++i) {
    double mean = 0.0;
    for (int b = 0; b < kEstoiBands; ++b) mean += seg[b * n + i];
    mean /= kEstoiBands;
    double norm = 0.0;
    for (int b = 0; b < kEstoiBands; ++b) {
      seg[b * n + i] -= mean;
      norm += seg[b * n + i] * seg[b * n + i];
    }
    norm = std::sqrt(norm);
    for (int b = 0; b < kEstoiBands; ++b)
      seg[b * n + i] = norm > 1e-300 ? seg[b * n + i] / norm : 0.0;
  }
}

}  // namespace

double Estoi(const TimeSignal& estimate, const TimeSignal& reference) {
  if (estimate.size() != reference.size())
    throw MetricError("ESTOI: estimate and reference lengths differ");
  if (estimate.sample_rate != reference.sample_rate)
    throw MetricError("ESTOI: sample rates differ");
  const long rate = std::lround(reference.sample_rate);
  if (rate <= 0) throw MetricError("ESTOI: invalid sample rate");
  const long g = std::gcd(rate, static_cast<long>(kEstoiRate));
  std::vector<double> x = ResamplePoly(reference.samples, kEstoiRate / g, rate / g);
  std::vector<double> y = ResamplePoly(estimate.samples, kEstoiRate / g, rate / g);
  RemoveSilentFrames(x, y);

  int frames_x = 0, frames_y = 0;
  const auto ex = ThirdOctaveEnvelopes(x, &frames_x);
  const auto ey = ThirdOctaveEnvelopes(y, &frames_y);
  if (frames_x < kEstoiSegment)
    throw MetricError("ESTOI: input too short (" + std::to_string(frames_x) +
                      " analysis frames, need " +
                      std::to_string(kEstoiSegment) + ")");

  const int n = kEstoiSegment;
  const int num_segments = frames_x - n + 1;
  std::vector<double> sx(kEstoiBands * n), sy(kEstoiBands * n);
  double total = 0.0;
  for (int m = n; m <= frames_x; ++m) {
    for (int b = 0; b < kEstoiBands; ++b)
      for (int i = 0; i < n; ++i) {
        sx[b * n + i] = ex[b * frames_x + (m - n + i)];
        sy[b * n + i] = ey[b * frames_x + (m - n + i)];
      }
    RowColumnNormalize(sx);
    RowColumnNormalize(sy);
    double acc = 0.0;
    for (size_t k = 0; k < sx.size(); ++k) acc += sx[k] * sy[k];
    total += acc / n;
  }
  return std::clamp(total / num_segments, -1.0, 1.0);
}

Aggregate Summarize(const std::vector<double>& values) {
  Aggregate a;
  a.n = values.size();
  if (values.empty()) return a;
  a.mean = std::accumulate(values.begin(), values.end(), 0.0) / a.n;
  if (a.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.std_error = std::sqrt(ss / (a.n - 1)) / std::sqrt(static_cast<double>(a.n));
  }
  return a;
}

void MetricReport::Add(std::string id, double si_sdr, double raw_estoi) {
  records.push_back({std::move(id), si_sdr, std::clamp(raw_estoi, 0.0, 1.0)});
}

Aggregate MetricReport::SiSdrSummary() const {
  std::vector<double> v;
  for (const auto& r : records) v.push_back(r.si_sdr);
  return Summarize(v);
}

Aggregate MetricReport::EstoiSummary() const {
  std::vector<double> v;
  for (const auto& r : records)
    if (!std::isnan(r.estoi)) v.push_back(r.estoi);
  return Summarize(v);
}

void MetricReport::WriteJsonl(std::ostream& os) const {
  for (const auto& r : records) {
    nlohmann::json j = {{"id", r.id}, {"si_sdr", r.si_sdr}, {"estoi", r.estoi},
                        {"pesq", nullptr}};
    os << j.dump() << '\n';
  }
  const Aggregate s = SiSdrSummary(), e = EstoiSummary();
  nlohmann::json summary = {
      {"summary",
       {{"n", s.n},
        {"error_convention", "standard_error"},
        {"si_sdr", {{"mean", s.mean}, {"std_error", s.std_error}}},
        {"estoi", e.n ? nlohmann::json{{"mean", e.mean}, {"std_error", e.std_error}}
                      : nlohmann::json(nullptr)},
        {"pesq", nullptr}}}};
  os << summary.dump() << '\n';
}

void MetricReport::WriteTable(std::ostream& os) const {
  const Aggregate s = SiSdrSummary(), e = EstoiSummary();
  os << std::fixed << std::setprecision(3);
  os << "n=" << s.n << "  SI-SDR " << s.mean << " +/- " << s.std_error << " dB  ESTOI ";
  if (e.n)
    os << e.mean << " +/- " << e.std_error;
  else
    os << "n/a";
  os << "  (+/- is standard error)\n";
}

RtfReport BenchmarkRtf(const EnhanceFn& enhance,
                       const std::vector<TimeSignal>& inputs,
                       const std::string& device, RtfOptions options) {
  if (inputs.empty()) throw MetricError("RTF benchmark: empty test set");
  if (options.warmup < 3) options.warmup = 3;
  if (options.repetitions < 1) options.repetitions = 1;
  double audio = 0.0;
  for (const auto& s : inputs) audio += s.duration();
  if (!(audio > 0.0)) throw MetricError("RTF benchmark: test set has no audio");

  for (int i = 0; i < options.warmup; ++i) enhance(inputs[i % inputs.size()], i % inputs.size());

  RtfReport report;
  report.audio_seconds = audio;
  report.device = device;
  for (int r = 0; r < options.repetitions; ++r) {
    const auto start = std::chrono::steady_clock::now();
    for (size_t i = 0; i < inputs.size(); ++i) enhance(inputs[i], i);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    report.per_repetition.push_back(dt.count() / audio);
  }
  auto sorted = report.per_repetition;
  std::sort(sorted.begin(), sorted.end());
  auto median_of = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  };
  report.median = median_of(sorted);
  report.min = sorted.front();
  report.max = sorted.back();
  std::vector<double> dev;
  for (double v : sorted) dev.push_back(std::abs(v - report.median));
  report.mad = median_of(dev);
  return report;
}

std::string DeviceDescriptor(int threads) {
  std::string model = "unknown-cpu";
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        model = line.substr(colon + 1);
        model.erase(0, model.find_first_not_of(' '));
      }
      break;
    }
  }
  return model + " (" + std::to_string(threads) + " thread" +
         (threads == 1 ? "" : "s") + ", " +
         std::to_string(std::thread::hardware_concurrency()) + " cores)";
}

}  // namespace flowse
