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

#include "morf/rng.hpp"

#include <sstream>

#include "morf/types.hpp"

namespace morf {

std::string engine_state(const Engine& engine) {
  std::ostringstream os;
  os << engine;
  return os.str();
}

void restore_engine(Engine& engine, const std::string& state) {
  std::istringstream is(state);
  is >> engine;
  if (!is) throw Error("restore_engine: malformed engine state");
}

}  // namespace morf
