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

// Definitional loss and metric oracles shared by the unit tests and the
// acceptance runner.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <utility>
#include <vector>

#include "compfuse/matrix.hpp"
#include "compfuse/retrieval.hpp"

namespace oracle {

inline std::vector<std::vector<double>> cosine_over_tau(const compfuse::MatrixD& q,
                                                        const compfuse::MatrixD& t, double tau) {
  std::vector<std::vector<double>> s(q.rows(), std::vector<double>(t.rows()));
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t j = 0; j < t.rows(); ++j) {
      double d = 0.0, nq = 0.0, nt = 0.0;
      for (std::size_t k = 0; k < q.cols(); ++k) {
        d += q(i, k) * t(j, k);
        nq += q(i, k) * q(i, k);
        nt += t(j, k) * t(j, k);
      }
      s[i][j] = d / std::sqrt(nq * nt) / tau;
    }
  }
  return s;
}

// Symmetric InfoNCE written as -log softmax of the diagonal, both directions.
inline double infonce(const compfuse::MatrixD& q, const compfuse::MatrixD& t, double tau) {
  const auto s = cosine_over_tau(q, t, tau);
  const std::size_t b = s.size();
  double q2t = 0.0, t2q = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    double zr = 0.0, zc = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      zr += std::exp(s[i][j]);
      zc += std::exp(s[j][i]);
    }
    q2t += -std::log(std::exp(s[i][i]) / zr);
    t2q += -std::log(std::exp(s[i][i]) / zc);
  }
  return 0.5 * (q2t + t2q) / static_cast<double>(b);
}

// Full ranking by double cosine, ties to the lower index.
inline std::vector<std::size_t> ranking(const std::vector<float>& q,
                                        const compfuse::Gallery& g) {
  std::vector<std::pair<double, std::size_t>> s;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double d = 0.0, nq = 0.0, ng = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
      d += double{q[k]} * g.row(i)[k];
      nq += double{q[k]} * q[k];
      ng += double{g.row(i)[k]} * g.row(i)[k];
    }
    s.emplace_back(d / std::sqrt(nq * ng), i);
  }
  std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::size_t> out;
  for (const auto& [score, i] : s) out.push_back(i);
  return out;
}

inline double recall(const std::vector<std::vector<std::size_t>>& rankings,
                     const std::vector<std::size_t>& target, std::size_t k) {
  std::size_t hits = 0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    const auto end =
        rankings[q].begin() + static_cast<std::ptrdiff_t>(std::min(k, rankings[q].size()));
    if (std::find(rankings[q].begin(), end, target[q]) != end) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

inline double mean_ap(const std::vector<std::vector<std::size_t>>& rankings,
                      const std::vector<std::set<std::size_t>>& truth, std::size_t k) {
  double total = 0.0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    std::vector<std::size_t> relevant_ranks;
    for (std::size_t r = 0; r < std::min(k, rankings[q].size()); ++r) {
      if (truth[q].count(rankings[q][r])) relevant_ranks.push_back(r + 1);
    }
    double ap = 0.0;
    for (std::size_t j = 0; j < relevant_ranks.size(); ++j) {
      ap += static_cast<double>(j + 1) / static_cast<double>(relevant_ranks[j]);
    }
    total += ap / static_cast<double>(std::min(k, truth[q].size()));
  }
  return total / static_cast<double>(rankings.size());
}

}  // namespace oracle
