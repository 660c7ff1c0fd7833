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

#include "flowse/signal.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

namespace flowse {

void TimeSignal::Validate() const {
  if (!(sample_rate > 0.0)) throw SignalError("sample rate must be positive");
  if (samples.empty()) throw SignalError("signal is empty");
  for (double v : samples)
    if (!std::isfinite(v)) throw SignalError("signal has non-finite samples");
}

double Power(const TimeSignal& s) {
  if (s.samples.empty()) return 0.0;
  double acc = 0.0;
  for (double v : s.samples) acc += v * v;
  return acc / static_cast<double>(s.samples.size());
}

double Rms(const TimeSignal& s) { return std::sqrt(Power(s)); }

void FrameParams::Validate() const {
  if (window_length < 2) throw SignalError("window length must be >= 2");
  if (hop < 1 || hop > window_length)
    throw SignalError("hop must lie in [1, window_length]");
}

void Compression::Validate() const {
  if (!(exponent > 0.0) || !(scale > 0.0))
    throw SignalError("compression exponent and scale must be positive");
}

bool TFRepresentation::AllFinite() const {
  return std::all_of(data.begin(), data.end(), [](const auto& c) {
    return std::isfinite(c.real()) && std::isfinite(c.imag());
  });
}

flowmath::TFArray TFRepresentation::ToArray() const {
  flowmath::TFArray a({2, num_bins, num_frames});
  const size_t plane = data.size();
  for (size_t i = 0; i < plane; ++i) {
    a[i] = data[i].real();
    a[plane + i] = data[i].imag();
  }
  return a;
}

void TFRepresentation::FromArray(const flowmath::TFArray& a) {
  const flowmath::Shape expected = {2, num_bins, num_frames};
  if (a.shape() != expected)
    throw flowmath::ShapeMismatchError("tf array", expected, a.shape());
  const size_t plane = data.size();
  for (size_t i = 0; i < plane; ++i) data[i] = {a[i], a[plane + i]};
}

std::vector<double> MakeWindow(const FrameParams& params) {
  std::vector<double> w(params.window_length);
  const double n = params.window_length;
  for (int i = 0; i < params.window_length; ++i) {
    const double s = std::sin(std::numbers::pi * i / n);
    w[i] = s * s;
  }
  return w;
}

int NumFrames(size_t n, const FrameParams& params) {
  return 1 + static_cast<int>(n / static_cast<size_t>(params.hop));
}

namespace {

// Plan creation is not thread-safe in FFTW; execution on new arrays is.
std::mutex& PlanMutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard<std::mutex> lock(PlanMutex());
    forward_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n, out_, in_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard<std::mutex> lock(PlanMutex());
      fftw_destroy_plan(forward_);
      fftw_destroy_plan(inverse_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* time() { return in_; }
  fftw_complex* freq() { return out_; }
  void Forward() { fftw_execute(forward_); }
  // Unnormalized: the caller divides by n.
  void Inverse() { fftw_execute(inverse_); }

 private:
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan forward_;
  fftw_plan inverse_;
};

}  // namespace

TFRepresentation Analyze(const TimeSignal& sig, const FrameParams& params,
                         const Compression& compression) {
  return AnalyzeFrames(sig, 0, NumFrames(sig.size(), params), params, compression);
}

TFRepresentation AnalyzeFrames(const TimeSignal& sig, int first_frame, int num_frames,
                               const FrameParams& params, const Compression& compression) {
  params.Validate();
  compression.Validate();
  sig.Validate();
  const int win = params.window_length;
  if (sig.size() < static_cast<size_t>(win))
    throw SignalError("signal of " + std::to_string(sig.size()) +
                      " samples is shorter than one window (" +
                      std::to_string(win) + ")");
  const int pad = win / 2;
  const int total = NumFrames(sig.size(), params);
  if (first_frame < 0 || num_frames <= 0 || first_frame + num_frames > total)
    throw SignalError("frame range [" + std::to_string(first_frame) + ", " +
                      std::to_string(first_frame + num_frames) + ") outside [0, " +
                      std::to_string(total) + ")");
  const int frames = num_frames;
  const int bins = params.num_bins();
  const auto window = MakeWindow(params);
  const long n = static_cast<long>(sig.size());

  TFRepresentation tf;
  tf.num_bins = bins;
  tf.num_frames = frames;
  tf.data.assign(static_cast<size_t>(bins) * frames, {0.0, 0.0});
  tf.frame = params;
  tf.compression = compression;
  tf.num_samples = sig.size();
  tf.sample_rate = sig.sample_rate;

  RealFft fft(win);
  const bool compress = compression.exponent != 1.0 || compression.scale != 1.0;
  for (int m = 0; m < frames; ++m) {
    const long start = static_cast<long>(first_frame + m) * params.hop - pad;
    for (int i = 0; i < win; ++i) {
      const long k = start + i;
      fft.time()[i] = (k >= 0 && k < n) ? sig.samples[k] * window[i] : 0.0;
    }
    fft.Forward();
    for (int b = 0; b < bins; ++b) {
      std::complex<double> c(fft.freq()[b][0], fft.freq()[b][1]);
      if (compress) {
        const double mag = std::abs(c);
        c = mag > 0.0 ? c * (compression.scale *
                             std::pow(mag, compression.exponent) / mag)
                      : std::complex<double>(0.0, 0.0);
      }
      tf.at(b, m) = c;
    }
  }
  return tf;
}

TimeSignal Synthesize(const TFRepresentation& tf) {
  tf.frame.Validate();
  tf.compression.Validate();
  if (!tf.AllFinite()) throw SignalError("TF representation has non-finite entries");
  const int win = tf.frame.window_length;
  if (tf.num_bins != tf.frame.num_bins() ||
      tf.data.size() != static_cast<size_t>(tf.num_bins) * tf.num_frames)
    throw SignalError("TF representation dimensions are inconsistent");
  const int pad = win / 2;
  const auto window = MakeWindow(tf.frame);
  const long total = static_cast<long>(tf.num_frames - 1) * tf.frame.hop + win;
  std::vector<double> acc(total, 0.0), norm(total, 0.0);

  const auto& comp = tf.compression;
  const bool compressed = comp.exponent != 1.0 || comp.scale != 1.0;
  RealFft fft(win);
  for (int m = 0; m < tf.num_frames; ++m) {
    for (int b = 0; b < tf.num_bins; ++b) {
      std::complex<double> c = tf.at(b, m);
      if (compressed) {
        const double mag = std::abs(c);
        c = mag > 0.0
                ? c * (std::pow(mag / comp.scale, 1.0 / comp.exponent) / mag)
                : std::complex<double>(0.0, 0.0);
      }
      fft.freq()[b][0] = c.real();
      fft.freq()[b][1] = c.imag();
    }
    fft.Inverse();
    const long start = static_cast<long>(m) * tf.frame.hop;
    for (int i = 0; i < win; ++i) {
      acc[start + i] += fft.time()[i] / win * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }

  TimeSignal out;
  out.sample_rate = tf.sample_rate;
  out.samples.assign(tf.num_samples, 0.0);
  for (size_t i = 0; i < tf.num_samples; ++i) {
    const long k = static_cast<long>(i) + pad;
    if (k < total && norm[k] > 1e-10) out.samples[i] = acc[k] / norm[k];
  }
  return out;
}

double GainForSnr(const TimeSignal& clean, const TimeSignal& noise,
                  double snr_db) {
  if (clean.sample_rate != noise.sample_rate)
    throw SignalError("clean and noise sample rates differ");
  if (noise.size() < clean.size())
    throw SignalError("noise is shorter than the clean signal");
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  double pc = 0.0, pn = 0.0;
  for (size_t i = 0; i < clean.size(); ++i) {
    pc += clean.samples[i] * clean.samples[i];
    pn += noise.samples[i] * noise.samples[i];
  }
  if (pn == 0.0) throw SignalError("noise is silent; mixing gain is undefined");
  return std::sqrt(pc / (pn * std::pow(10.0, snr_db / 10.0)));
}

TimeSignal MixAtSnr(const TimeSignal& clean, const TimeSignal& noise,
                    double snr_db) {
  const double g = GainForSnr(clean, noise, snr_db);
  TimeSignal out = clean;
  if (g == 0.0) return out;
  for (size_t i = 0; i < out.size(); ++i) out.samples[i] += g * noise.samples[i];
  return out;
}

double MeasureSnrDb(const TimeSignal& clean, const TimeSignal& noise) {
  const size_t n = std::min(clean.size(), noise.size());
  double pc = 0.0, pn = 0.0;
  for (size_t i = 0; i < n; ++i) {
    pc += clean.samples[i] * clean.samples[i];
    pn += noise.samples[i] * noise.samples[i];
  }
  return 10.0 * std::log10(pc / pn);
}

}  // namespace flowse
