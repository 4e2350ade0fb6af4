// Copyright 2026 The compfuse Authors
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

#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace compfuse {

// Seeded PRNG with platform-independent output. The engine is
// std::mt19937_64, whose sequence is fixed by the standard; the
// distributions are implemented here because the standard library ones are
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Rejection sampling removes modulo bias.
  std::uint64_t uniform_index(std::uint64_t n);

  // Standard normal via Box-Muller (one draw per call, no caching).
  double normal();

  // Normal(0, std) resampled until it falls inside +-bound*std.
  double truncated_normal(double std, double bound = 2.0);

  std::string state() const;
  void set_state(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

template <typename Container>
void shuffle(Container& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = rng.uniform_index(i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace compfuse
