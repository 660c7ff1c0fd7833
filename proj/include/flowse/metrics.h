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

// Objective measures: SI-SDR, ESTOI and real-time-factor benchmarking.

#ifndef FLOWSE_METRICS_H_
#define FLOWSE_METRICS_H_

#include <functional>
#include <iosfwd>
#include <optional>
#include <limits>
#include <string>
#include <vector>

#include "flowse/signal.h"

namespace flowse {

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kSiSdrCapDb = 100.0;

// Scale-invariant SDR in dB after mean removal, clamped to
// [-kSiSdrCapDb, kSiSdrCapDb]. An all-zero estimate yields -kSiSdrCapDb;
// an all-zero reference is an error.
double SiSdr(const TimeSignal& estimate, const TimeSignal& reference);

// Extended short-time objective intelligibility of `estimate` against
// `reference`, computed at 10 kHz on one-third-octave band envelopes with
// 384 ms segments. Returns a value in [-1, 1]. Throws MetricError when fewer
// than 30 analysis frames survive silent-frame removal.
double Estoi(const TimeSignal& estimate, const TimeSignal& reference);

// Polyphase windowed-sinc resampling (Kaiser, beta 5) by a rational factor.
std::vector<double> ResamplePoly(const std::vector<double>& x, int up, int down);

// ESTOI slot of a record whose ESTOI was not computed.
inline constexpr double kNotComputed = std::numeric_limits<double>::quiet_NaN();

struct MetricRecord {
  std::string id;
  double si_sdr = 0.0;
  double estoi = 0.0;  // clipped to [0, 1], or kNotComputed
};

struct Aggregate {
  double mean = 0.0;
  double std_error = 0.0;  // sample std / sqrt(n)
  size_t n = 0;
};

Aggregate Summarize(const std::vector<double>& values);

struct MetricReport {
  std::vector<MetricRecord> records;

  void Add(std::string id, double si_sdr, double raw_estoi);
  Aggregate SiSdrSummary() const;
  // Over records with a computed ESTOI; n = 0 when there are none.
  Aggregate EstoiSummary() const;

  // One JSON object per record, then a {"summary": ...} line. The PESQ slot
  // is emitted as null.
  void WriteJsonl(std::ostream& os) const;
  void WriteTable(std::ostream& os) const;
};

struct RtfOptions {
  int warmup = 3;
  int repetitions = 10;
};

struct RtfReport {
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  double mad = 0.0;  // median absolute deviation
  std::vector<double> per_repetition;
  double audio_seconds = 0.0;
  std::string device;
};

using EnhanceFn = std::function<TimeSignal(const TimeSignal&, size_t index)>;

// RTF = wall-clock seconds of enhancement per second of audio, measured over
// the whole set once per repetition; the median over repetitions is reported.
RtfReport BenchmarkRtf(const EnhanceFn& enhance,
                       const std::vector<TimeSignal>& inputs,
                       const std::string& device, RtfOptions options = {});

// CPU model string plus thread count, for RTF reports.
std::string DeviceDescriptor(int threads);

}  // namespace flowse

#endif  // FLOWSE_METRICS_H_
