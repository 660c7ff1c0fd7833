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

// On-disk corpus cache. One directory per corpus spec hash:
//
//   <root>/<hash>/spec.json        resolved spec, written last
//   <root>/<hash>/manifest.jsonl   one row per example
//   <root>/<hash>/<split>/<id>_{noisy,clean}.wav, <id>_side.txt
//
// A directory whose spec.json matches the requested hash is reused as is.

#ifndef FLOWSE_CORPUS_STORE_H_
#define FLOWSE_CORPUS_STORE_H_

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "flowse/datagen.h"

namespace flowse {

inline constexpr const char* kCacheEnvVar = "FLOWSE_CACHE_DIR";

// $FLOWSE_CACHE_DIR, else $HOME/.cache/flowse, else ./flowse_cache.
std::string DefaultCacheRoot();

std::string CorpusDirectory(const CorpusSpec& spec, const std::string& root);

struct CorpusHandle {
  std::string dir;
  bool generated = false;  // false: an existing matching corpus was reused
  size_t rows = 0;
};

CorpusHandle EnsureCorpus(const CorpusSpec& spec, const std::string& root,
                          std::ostream* progress = nullptr);

// Text matrix: a "frames dim" header line, then one row per frame.
void WriteSideInfo(const std::string& path, const SideInfo& info);
SideInfo ReadSideInfo(const std::string& path);

// Streams the examples of one split in index order. The interference
// signal is reconstructed as noisy - clean.
void ForEachExample(const std::string& dir, Split split,
                    const std::function<void(Example&&)>& fn);
std::vector<Example> LoadSplit(const std::string& dir, Split split);

}  // namespace flowse

#endif  // FLOWSE_CORPUS_STORE_H_
