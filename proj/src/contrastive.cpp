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

#include "compfuse/contrastive.hpp"

#include <cmath>
#include <string>

#include "compfuse/errors.hpp"
#include "compfuse/kernels.hpp"

namespace compfuse {

void LossConfig::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("loss.temperature must be > 0");
  if (!(hn_alpha >= 0.0)) throw ConfigError("loss.hn_alpha must be >= 0");
  if (!(hn_beta >= 0.0)) throw ConfigError("loss.hn_beta must be >= 0");
  if (std::abs(video_weight + caption_weight - 1.0) > 1e-9) {
    throw ConfigError("loss.video_weight + loss.caption_weight must equal 1");
  }
}

template <typename T>
Matrix<T> cosine_matrix(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("cosine_matrix: widths of " + a.shape_string() + " and " +
                     b.shape_string() + " differ");
  }
  auto norms = [](const Matrix<T>& m, const char* which) {
    std::vector<double> out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
      out[i] = std::sqrt(kernels::sum_squares<T>(m.row(i)));
      if (!(out[i] > 0.0)) {
        throw NumericError(std::string("cosine_matrix: ") + which + " row " +
                           std::to_string(i) + " has zero norm");
      }
    }
    return out;
  };
  const auto na = norms(a, "left");
  const auto nb = norms(b, "right");
  Matrix<T> out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double dot = kernels::dot_wide<T>(a.row(i), b.row(j));
      out(i, j) = static_cast<T>(dot / (na[i] * nb[j]));
    }
  }
  return out;
}

template <typename T>
Var<T> cosine_logits(Var<T> queries, Var<T> targets, T temperature) {
  return ops::scale(ops::matmul_nt(ops::l2_normalize_rows(queries),
                                   ops::l2_normalize_rows(targets)),
                    T{1} / temperature);
}

template <typename T>
Var<T> hn_nce_loss(Var<T> queries, Var<T> targets, const LossConfig& cfg) {
  cfg.validate();
  if (queries.rows() < 2) {
    throw UsageError("hn_nce_loss: batch of " + std::to_string(queries.rows()) +
                     " rows; contrastive training needs at least 2");
  }
  if (!queries.value().same_shape(targets.value())) {
    throw ShapeError("hn_nce_loss: queries " + queries.value().shape_string() +
                     " and targets " + targets.value().shape_string() + " differ");
  }
  const T alpha = static_cast<T>(cfg.hn_alpha);
  const T beta = static_cast<T>(cfg.hn_beta);
  Var<T> logits = cosine_logits(queries, targets, static_cast<T>(cfg.temperature));
  Var<T> q2t = ops::mean(ops::hn_nce_rows(logits, alpha, beta));
  Var<T> t2q = ops::mean(ops::hn_nce_rows(ops::transpose(logits), alpha, beta));
  return ops::scale(ops::add(q2t, t2q), T{0.5});
}

template <typename T>
Var<T> dual_target_loss(Var<T> queries, Var<T> video_targets, Var<T> caption_targets,
                        const LossConfig& cfg) {
  Var<T> video = hn_nce_loss(queries, video_targets, cfg);
  Var<T> caption = hn_nce_loss(queries, caption_targets, cfg);
  return ops::add(ops::scale(video, static_cast<T>(cfg.video_weight)),
                  ops::scale(caption, static_cast<T>(cfg.caption_weight)));
}

template <typename T>
T hn_nce_loss_value(const Matrix<T>& queries, const Matrix<T>& targets, const LossConfig& cfg) {
  Tape<T> tape(false);
  return hn_nce_loss(tape.constant(queries), tape.constant(targets), cfg).value()(0, 0);
}

template <typename T>
T dual_target_loss_value(const BatchEmbeddings<T>& batch, const LossConfig& cfg) {
  Tape<T> tape(false);
  return dual_target_loss(tape.constant(batch.queries), tape.constant(batch.video_targets),
                          tape.constant(batch.caption_targets), cfg)
      .value()(0, 0);
}

#define COMPFUSE_INSTANTIATE(T)                                                    \
  template Matrix<T> cosine_matrix(const Matrix<T>&, const Matrix<T>&);           \
  template Var<T> cosine_logits(Var<T>, Var<T>, T);                               \
  template Var<T> hn_nce_loss(Var<T>, Var<T>, const LossConfig&);                 \
  template Var<T> dual_target_loss(Var<T>, Var<T>, Var<T>, const LossConfig&);    \
  template T hn_nce_loss_value(const Matrix<T>&, const Matrix<T>&, const LossConfig&); \
  template T dual_target_loss_value(const BatchEmbeddings<T>&, const LossConfig&);

COMPFUSE_INSTANTIATE(float)
COMPFUSE_INSTANTIATE(double)
#undef COMPFUSE_INSTANTIATE

}  // namespace compfuse
