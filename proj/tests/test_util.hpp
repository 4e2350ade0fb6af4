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

#include <cstddef>
#include <vector>

#include "compfuse/attention.hpp"
#include "compfuse/matrix.hpp"
#include "compfuse/rng.hpp"
#include "reference_model.hpp"

namespace testutil {

template <typename T>
compfuse::Matrix<T> random_matrix(std::size_t r, std::size_t c, compfuse::Rng& rng,
                                  double scale = 1.0) {
  compfuse::Matrix<T> m(r, c);
  for (auto& v : m.data()) v = static_cast<T>(scale * rng.normal());
  return m;
}

inline ref::Mat to_ref(const compfuse::MatrixD& m) {
  ref::Mat out(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

inline ref::Mask to_ref(const compfuse::TokenMask& m) { return ref::Mask(m.begin(), m.end()); }

inline double max_abs_diff(const compfuse::MatrixD& a, const ref::Mat& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) worst = std::max(worst, std::abs(a(i, j) - b[i][j]));
  }
  return worst;
}

// Random mask with at least one valid position.
inline compfuse::TokenMask random_mask(std::size_t n, compfuse::Rng& rng) {
  compfuse::TokenMask m(n);
  for (auto& v : m) v = rng.uniform() < 0.7 ? 1 : 0;
  m[rng.uniform_index(n)] = 1;
  return m;
}

}  // namespace testutil
