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

// Dual-target contrastive objective.
//
// Similarities are cosine, scaled by 1/temperature. Each direction
// (query->target and target->query) uses a hard-negative weighted NCE:
//
//   loss_i = -log( e^{s_ii} / (alpha e^{s_ii} + sum_{j!=i} w_ij e^{s_ij}) )
//   w_ij   = (B-1) e^{beta s_ij} / sum_{k!=i} e^{beta s_ik}
//
// averaged over rows, then over the two directions. alpha = 1, beta = 0
// gives symmetric InfoNCE.

#include "compfuse/matrix.hpp"
#include "compfuse/tape.hpp"

namespace compfuse {

struct LossConfig {
  double temperature = 0.07;
  double hn_alpha = 1.0;
  double hn_beta = 0.5;
  double video_weight = 0.5;
  double caption_weight = 0.5;

  // ConfigError on tau <= 0, alpha < 0, beta < 0 or weights not summing to 1.
  void validate() const;
};

template <typename T>
struct BatchEmbeddings {
  Matrix<T> queries;          // B x d, emb_mm rows
  Matrix<T> video_targets;    // B x d, y_v rows
  Matrix<T> caption_targets;  // B x d, y_c rows
};

// Entry (i, j) = cos(a_i, b_j). Dots and norms accumulate in double. Zero
// rows raise NumericError.
template <typename T>
Matrix<T> cosine_matrix(const Matrix<T>& a, const Matrix<T>& b);

template <typename T>
Var<T> cosine_logits(Var<T> queries, Var<T> targets, T temperature);

// Requires B >= 2 (UsageError otherwise).
template <typename T>
Var<T> hn_nce_loss(Var<T> queries, Var<T> targets, const LossConfig& cfg);

template <typename T>
Var<T> dual_target_loss(Var<T> queries, Var<T> video_targets, Var<T> caption_targets,
                        const LossConfig& cfg);

template <typename T>
T hn_nce_loss_value(const Matrix<T>& queries, const Matrix<T>& targets, const LossConfig& cfg);

template <typename T>
T dual_target_loss_value(const BatchEmbeddings<T>& batch, const LossConfig& cfg);

}  // namespace compfuse
