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

#include "flowse/wav.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

namespace flowse {
namespace {

uint32_t ReadU32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4))
    throw WavError("unexpected end of WAV data");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint16_t ReadU16(std::istream& is) {
  std::array<unsigned char, 2> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 2))
    throw WavError("unexpected end of WAV data");
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

std::string ReadTag(std::istream& is) {
  char tag[4];
  if (!is.read(tag, 4)) throw WavError("unexpected end of WAV data");
  return std::string(tag, 4);
}

void WriteU32(std::ostream& os, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void WriteU16(std::ostream& os, uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

TimeSignal ReadWav(std::istream& is) {
  if (ReadTag(is) != "RIFF") throw WavError("not a RIFF file");
  ReadU32(is);
  if (ReadTag(is) != "WAVE") throw WavError("RIFF file is not WAVE");

  bool have_fmt = false;
  uint16_t channels = 0, bits = 0, format = 0;
  uint32_t rate = 0;
  while (true) {
    const std::string tag = ReadTag(is);
    const uint32_t size = ReadU32(is);
    if (tag == "fmt ") {
      if (size < 16) throw WavError("fmt chunk too small");
      format = ReadU16(is);
      channels = ReadU16(is);
      rate = ReadU32(is);
      ReadU32(is);  // byte rate
      ReadU16(is);  // block align
      bits = ReadU16(is);
      is.ignore(size - 16 + (size & 1));
      have_fmt = true;
    } else if (tag == "data") {
      if (!have_fmt) throw WavError("data chunk before fmt chunk");
      if (format != 1)
        throw WavError("unsupported WAV encoding (format tag " +
                       std::to_string(format) + "); only PCM is supported");
      if (channels != 1)
        throw WavError("unsupported channel count " + std::to_string(channels) +
                       "; only mono is supported");
      if (bits != 16)
        throw WavError("unsupported sample width " + std::to_string(bits) +
                       " bits; only 16-bit PCM is supported");
      if (rate == 0) throw WavError("WAV sample rate is zero");
      const size_t n = size / 2;
      std::vector<int16_t> raw(n);
      if (!is.read(reinterpret_cast<char*>(raw.data()),
                   static_cast<std::streamsize>(n * 2)))
        throw WavError("truncated WAV data chunk");
      TimeSignal sig;
      sig.sample_rate = rate;
      sig.samples.resize(n);
      for (size_t i = 0; i < n; ++i) {
        const auto* p = reinterpret_cast<const unsigned char*>(&raw[i]);
        const auto v = static_cast<int16_t>(p[0] | (p[1] << 8));
        sig.samples[i] = v / 32768.0;
      }
      return sig;
    } else {
      is.ignore(size + (size & 1));
      if (!is) throw WavError("unexpected end of WAV data");
    }
  }
}

TimeSignal ReadWav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw WavError("cannot open WAV file " + path);
  return ReadWav(is);
}

void WriteWav(std::ostream& os, const TimeSignal& sig) {
  const auto n = static_cast<uint32_t>(sig.samples.size());
  const auto rate = static_cast<uint32_t>(std::lround(sig.sample_rate));
  os.write("RIFF", 4);
  WriteU32(os, 36 + n * 2);
  os.write("WAVEfmt ", 8);
  WriteU32(os, 16);
  WriteU16(os, 1);
  WriteU16(os, 1);
  WriteU32(os, rate);
  WriteU32(os, rate * 2);
  WriteU16(os, 2);
  WriteU16(os, 16);
  os.write("data", 4);
  WriteU32(os, n * 2);
  for (double v : sig.samples) {
    const double scaled = std::round(std::clamp(v, -1.0, 1.0) * 32768.0);
    const auto code = static_cast<int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    WriteU16(os, static_cast<uint16_t>(code));
  }
  if (!os) throw WavError("failed writing WAV data");
}

void WriteWav(const std::string& path, const TimeSignal& sig) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw WavError("cannot create WAV file " + path);
  WriteWav(os, sig);
}

}  // namespace flowse
