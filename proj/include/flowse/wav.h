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

// Single-channel 16-bit PCM RIFF/WAVE reading and writing.

#ifndef FLOWSE_WAV_H_
#define FLOWSE_WAV_H_

#include <iosfwd>
#include <string>

#include "flowse/signal.h"

namespace flowse {

class WavError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Samples are scaled to [-1, 1). Anything other than mono 16-bit PCM is
// rejected with WavError.
TimeSignal ReadWav(std::istream& is);
TimeSignal ReadWav(const std::string& path);

// Samples are clipped to [-1, 1] and rounded to the nearest 16-bit code.
void WriteWav(std::ostream& os, const TimeSignal& sig);
void WriteWav(const std::string& path, const TimeSignal& sig);

}  // namespace flowse

#endif  // FLOWSE_WAV_H_
