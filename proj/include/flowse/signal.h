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

// Waveforms, the compressed complex short-time spectrum every network works
// on, and SNR-controlled mixing.

#ifndef FLOWSE_SIGNAL_H_
#define FLOWSE_SIGNAL_H_

#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include "flowse/flowmath.h"

namespace flowse {

class SignalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TimeSignal {
  std::vector<double> samples;
  double sample_rate = 16000.0;

  TimeSignal() = default;
  TimeSignal(std::vector<double> s, double rate)
      : samples(std::move(s)), sample_rate(rate) {}

  size_t size() const { return samples.size(); }
  double duration() const { return samples.size() / sample_rate; }

  // Throws SignalError when the waveform is empty, non-finite, or has a
  // non-positive rate.
  void Validate() const;
};

double Power(const TimeSignal& s);  // mean square
double Rms(const TimeSignal& s);

enum class WindowType { kPeriodicHann };

struct FrameParams {
  int window_length = 510;
  int hop = 128;
  WindowType window = WindowType::kPeriodicHann;

  int num_bins() const { return window_length / 2 + 1; }
  void Validate() const;
};

// |s|^exponent * exp(i angle(s)) * scale. exponent = scale = 1 disables it.
struct Compression {
  double exponent = 0.5;
  double scale = 0.15;

  static Compression None() { return {1.0, 1.0}; }
  void Validate() const;
};

// Complex (bins x frames) array, row-major by bin. Remembers the waveform
// length so synthesis can undo the centred framing exactly.
struct TFRepresentation {
  int num_bins = 0;
  int num_frames = 0;
  std::vector<std::complex<double>> data;
  FrameParams frame;
  Compression compression;
  size_t num_samples = 0;
  double sample_rate = 16000.0;

  std::complex<double>& at(int bin, int frame_index) {
    return data[static_cast<size_t>(bin) * num_frames + frame_index];
  }
  const std::complex<double>& at(int bin, int frame_index) const {
    return data[static_cast<size_t>(bin) * num_frames + frame_index];
  }
  bool AllFinite() const;

  // (2, bins, frames) real array: channel 0 real part, channel 1 imaginary.
  flowmath::TFArray ToArray() const;
  // Replaces data from a (2, bins, frames) array of matching size.
  void FromArray(const flowmath::TFArray& a);
};

std::vector<double> MakeWindow(const FrameParams& params);

// Number of frames analyze() produces for a signal of n samples.
int NumFrames(size_t n, const FrameParams& params);

TFRepresentation Analyze(const TimeSignal& sig, const FrameParams& params = {},
                         const Compression& compression = {});

// Frames [first_frame, first_frame + num_frames) of Analyze(sig), computed
// without transforming the rest of the signal.
TFRepresentation AnalyzeFrames(const TimeSignal& sig, int first_frame, int num_frames,
                               const FrameParams& params = {},
                               const Compression& compression = {});

TimeSignal Synthesize(const TFRepresentation& tf);

// Passing this as snr_db returns the clean signal untouched.
inline constexpr double kNoNoiseSnr = std::numeric_limits<double>::infinity();

// Gain g such that 10 log10(P_clean / P_{g noise}) = snr_db over the first
// clean.size() samples of the noise.
double GainForSnr(const TimeSignal& clean, const TimeSignal& noise,
                  double snr_db);

// clean + g * noise, noise cropped to the clean length.
TimeSignal MixAtSnr(const TimeSignal& clean, const TimeSignal& noise,
                    double snr_db);

// 10 log10(P_clean / P_noise) by direct measurement.
double MeasureSnrDb(const TimeSignal& clean, const TimeSignal& noise);

}  // namespace flowse

#endif  // FLOWSE_SIGNAL_H_
