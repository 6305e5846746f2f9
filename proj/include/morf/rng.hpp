// Copyright 2026 The MORF Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================
// Seedable pseudorandom streams. Each purpose draws from its own engine so
// that, e.g., changing the batch order never perturbs forest construction.

#ifndef MORF_RNG_HPP_
#define MORF_RNG_HPP_

#include <cstdint>
#include <random>
#include <string>

namespace morf {

using Engine = std::mt19937_64;

enum class Stream : std::uint64_t {
  kInit = 1,
  kAssignment = 2,
  kDynamic = 3,
  kShuffle = 4,
  kData = 5,
  kSplit = 6,
};

inline Engine make_engine(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return Engine(seq);
}

struct RngStreams {
  explicit RngStreams(std::uint64_t seed = 0)
      : init(make_engine(seed, Stream::kInit)),
        assignment(make_engine(seed, Stream::kAssignment)),
        dynamic(make_engine(seed, Stream::kDynamic)),
        shuffle(make_engine(seed, Stream::kShuffle)) {}

  Engine init;
  Engine assignment;
  Engine dynamic;
  Engine shuffle;
};

std::string engine_state(const Engine& engine);
void restore_engine(Engine& engine, const std::string& state);

}  // namespace morf

#endif  // MORF_RNG_HPP_
