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

#include "compfuse/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "compfuse/errors.hpp"

namespace compfuse {

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw UsageError("uniform_index(0)");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::truncated_normal(double std, double bound) {
  for (;;) {
    const double z = normal();
    if (std::abs(z) <= bound) return z * std;
  }
}

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::set_state(const std::string& state) {
  std::istringstream is(state);
  is >> engine_;
  if (is.fail()) throw DataError("invalid PRNG state");
}

}  // namespace compfuse
