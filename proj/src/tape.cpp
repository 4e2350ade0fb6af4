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

#include "compfuse/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "compfuse/errors.hpp"
#include "compfuse/kernels.hpp"

namespace compfuse {

template <typename T>
Var<T> Tape<T>::constant(Matrix<T> value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var<T>(this, nodes_.size() - 1);
}

template <typename T>
Var<T> Tape<T>::param(ParamTensor<T>& p) {
  Node n;
  n.value = p.value;
  n.requires_grad = record_ && p.trainable;
  n.param = n.requires_grad ? &p : nullptr;
  nodes_.push_back(std::move(n));
  return Var<T>(this, nodes_.size() - 1);
}

template <typename T>
Var<T> Tape<T>::record(Matrix<T> value, std::span<const Var<T>> parents,
                       BackwardFn fn) {
  if (!value.all_finite()) {
    throw NumericError("non-finite value produced at tape node " +
                       std::to_string(nodes_.size()));
  }
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const Var<T>& p : parents) {
      if (&p.tape() != this) throw UsageError("operands belong to different tapes");
      if (nodes_[p.id()].requires_grad) n.requires_grad = true;
    }
    if (n.requires_grad) n.backward = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return Var<T>(this, nodes_.size() - 1);
}

template <typename T>
Matrix<T>* Tape<T>::grad_sink(std::size_t id) {
  Node& n = nodes_.at(id);
  if (!n.requires_grad) return nullptr;
  if (!n.has_grad) {
    n.grad = Matrix<T>(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return &n.grad;
}

template <typename T>
const Matrix<T>* Tape<T>::grad(Var<T> v) const {
  const Node& n = nodes_.at(v.id());
  return n.has_grad ? &n.grad : nullptr;
}

template <typename T>
void Tape<T>::backward(Var<T> output) {
  if (&output.tape() != this) throw UsageError("backward: output is on another tape");
  const Node& out = nodes_.at(output.id());
  if (out.value.rows() != 1 || out.value.cols() != 1) {
    throw UsageError("backward requires a scalar output, got " +
                     out.value.shape_string());
  }
  if (!record_) throw UsageError("backward on a tape built without recording");
  for (Node& n : nodes_) {
    if (n.has_grad) n.grad.fill(T{0});
  }
  Matrix<T>* seed = grad_sink(output.id());
  if (seed == nullptr) return;  // nothing trainable upstream
  (*seed)(0, 0) = T{1};
  for (std::size_t i = output.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param != nullptr) {
      auto dst = n.param->grad.data();
      auto src = n.grad.data();
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
      n.param->has_grad = true;
    }
  }
}

template class Tape<float>;
template class Tape<double>;

namespace ops {
namespace {

template <typename T>
void accumulate(Matrix<T>& dst, const Matrix<T>& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < s.size(); ++i) d[i] += s[i];
}

template <typename T>
void require_same_shape(const char* op, Var<T> a, Var<T> b) {
  if (!a.value().same_shape(b.value())) {
    throw ShapeError(std::string(op) + ": shapes " + a.value().shape_string() +
                     " and " + b.value().shape_string() + " differ");
  }
}

template <typename T>
T log_add_exp(T a, T b) {
  if (a == -std::numeric_limits<T>::infinity()) return b;
  if (b == -std::numeric_limits<T>::infinity()) return a;
  const T m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  return a.tape().record(compfuse::matmul(a.value(), b.value()), {a, b},
                         [a, b](Tape<T>& tape, const Matrix<T>& g) {
                           if (auto* ga = tape.grad_sink(a)) {
                             accumulate(*ga, compfuse::matmul_nt(g, b.value()));
                           }
                           if (auto* gb = tape.grad_sink(b)) {
                             accumulate(*gb, compfuse::matmul_tn(a.value(), g));
                           }
                         });
}

template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
  return a.tape().record(compfuse::matmul_nt(a.value(), b.value()), {a, b},
                         [a, b](Tape<T>& tape, const Matrix<T>& g) {
                           if (auto* ga = tape.grad_sink(a)) {
                             accumulate(*ga, compfuse::matmul(g, b.value()));
                           }
                           if (auto* gb = tape.grad_sink(b)) {
                             accumulate(*gb, compfuse::matmul_tn(g, a.value()));
                           }
                         });
}

template <typename T>
Var<T> transpose(Var<T> a) {
  return a.tape().record(compfuse::transpose(a.value()), {a},
                         [a](Tape<T>& tape, const Matrix<T>& g) {
                           if (auto* ga = tape.grad_sink(a)) {
                             accumulate(*ga, compfuse::transpose(g));
                           }
                         });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same_shape("add", a, b);
  Matrix<T> out = a.value();
  accumulate(out, b.value());
  return a.tape().record(std::move(out), {a, b},
                         [a, b](Tape<T>& tape, const Matrix<T>& g) {
                           if (auto* ga = tape.grad_sink(a)) accumulate(*ga, g);
                           if (auto* gb = tape.grad_sink(b)) accumulate(*gb, g);
                         });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  require_same_shape("sub", a, b);
  Matrix<T> out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  return a.tape().record(std::move(out), {a, b},
                         [a, b](Tape<T>& tape, const Matrix<T>& g) {
                           if (auto* ga = tape.grad_sink(a)) accumulate(*ga, g);
                           if (auto* gb = tape.grad_sink(b)) {
                             auto d = gb->data();
                             auto s = g.data();
                             for (std::size_t i = 0; i < s.size(); ++i) d[i] -= s[i];
                           }
                         });
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  Matrix<T> out = a.value();
  for (T& v : out.data()) v *= factor;
  return a.tape().record(std::move(out), {a},
                         [a, factor](Tape<T>& tape, const Matrix<T>& g) {
                           if (auto* ga = tape.grad_sink(a)) {
                             auto d = ga->data();
                             auto s = g.data();
                             for (std::size_t i = 0; i < s.size(); ++i) {
                               d[i] += factor * s[i];
                             }
                           }
                         });
}

template <typename T>
Var<T> add_row(Var<T> a, Var<T> row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("add_row: row " + row.value().shape_string() +
                     " does not broadcast over " + a.value().shape_string());
  }
  Matrix<T> out = a.value();
  auto b = row.value().row(0);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += b[j];
  }
  return a.tape().record(std::move(out), {a, row},
                         [a, row](Tape<T>& tape, const Matrix<T>& g) {
                           if (auto* ga = tape.grad_sink(a)) accumulate(*ga, g);
                           if (auto* gr = tape.grad_sink(row)) {
                             auto d = gr->row(0);
                             for (std::size_t i = 0; i < g.rows(); ++i) {
                               auto s = g.row(i);
                               for (std::size_t j = 0; j < s.size(); ++j) d[j] += s[j];
                             }
                           }
                         });
}

template <typename T>
Var<T> gelu(Var<T> a) {
  return a.tape().record(compfuse::gelu(a.value()), {a},
                         [a](Tape<T>& tape, const Matrix<T>& g) {
                           if (auto* ga = tape.grad_sink(a)) {
                             auto x = a.value().data();
                             auto s = g.data();
                             auto d = ga->data();
                             for (std::size_t i = 0; i < s.size(); ++i) {
                               d[i] += s[i] * gelu_derivative(x[i]);
                             }
                           }
                         });
}

template <typename T>
Var<T> layer_norm(Var<T> a, Var<T> gain, Var<T> bias, T eps) {
  if (gain.rows() != 1 || bias.rows() != 1) {
    throw ShapeError("layer_norm: gain and bias must be single rows");
  }
  Matrix<T> out = compfuse::layer_norm_rows(a.value(), gain.value().row(0),
                                            bias.value().row(0), eps);
  return a.tape().record(
      std::move(out), {a, gain, bias},
      [a, gain, bias, eps](Tape<T>& tape, const Matrix<T>& g) {
        const Matrix<T>& x = a.value();
        const std::size_t n = x.cols();
        auto gamma = gain.value().row(0);
        Matrix<T>* ga = tape.grad_sink(a);
        Matrix<T>* gg = tape.grad_sink(gain);
        Matrix<T>* gb = tape.grad_sink(bias);
        std::vector<T> xhat(n);
        std::vector<T> dxhat(n);
        for (std::size_t i = 0; i < x.rows(); ++i) {
          auto in = x.row(i);
          T mean = T{0};
          for (T v : in) mean += v;
          mean /= static_cast<T>(n);
          T var = T{0};
          for (T v : in) var += (v - mean) * (v - mean);
          var /= static_cast<T>(n);
          const T inv = T{1} / std::sqrt(var + eps);
          auto gi = g.row(i);
          T mean_d = T{0};
          T mean_dx = T{0};
          for (std::size_t j = 0; j < n; ++j) {
            xhat[j] = (in[j] - mean) * inv;
            dxhat[j] = gi[j] * gamma[j];
            mean_d += dxhat[j];
            mean_dx += dxhat[j] * xhat[j];
          }
          mean_d /= static_cast<T>(n);
          mean_dx /= static_cast<T>(n);
          if (ga != nullptr) {
            auto d = ga->row(i);
            for (std::size_t j = 0; j < n; ++j) {
              d[j] += inv * (dxhat[j] - mean_d - xhat[j] * mean_dx);
            }
          }
          if (gg != nullptr) {
            auto d = gg->row(0);
            for (std::size_t j = 0; j < n; ++j) d[j] += gi[j] * xhat[j];
          }
          if (gb != nullptr) {
            auto d = gb->row(0);
            for (std::size_t j = 0; j < n; ++j) d[j] += gi[j];
          }
        }
      });
}

template <typename T>
Var<T> softmax_rows(Var<T> a) {
  Matrix<T> out = compfuse::softmax_rows(a.value());
  Matrix<T> y = out;
  return a.tape().record(std::move(out), {a},
                         [a, y = std::move(y)](Tape<T>& tape, const Matrix<T>& g) {
                           Matrix<T>* ga = tape.grad_sink(a);
                           if (ga == nullptr) return;
                           for (std::size_t i = 0; i < y.rows(); ++i) {
                             auto yi = y.row(i);
                             auto gi = g.row(i);
                             T dot = T{0};
                             for (std::size_t j = 0; j < yi.size(); ++j) dot += yi[j] * gi[j];
                             auto d = ga->row(i);
                             for (std::size_t j = 0; j < yi.size(); ++j) {
                               d[j] += yi[j] * (gi[j] - dot);
                             }
                           }
                         });
}

template <typename T>
Var<T> attention(Var<T> q, Var<T> k, Var<T> v, const TokenMask& kv_mask,
                 std::size_t heads) {
  if (k.rows() != v.rows() || k.cols() != v.cols()) {
    throw ShapeError("attention: key " + k.value().shape_string() +
                     " and value " + v.value().shape_string() + " differ");
  }
  std::vector<Matrix<T>> probs =
      compfuse::attention_probabilities(q.value(), k.value(), kv_mask, heads);
  Matrix<T> out = compfuse::attention_combine(probs, v.value(), heads);
  return q.tape().record(
      std::move(out), {q, k, v},
      [q, k, v, heads, probs = std::move(probs)](Tape<T>& tape, const Matrix<T>& g) {
        const Matrix<T>& qv = q.value();
        const Matrix<T>& kv = k.value();
        const Matrix<T>& vv = v.value();
        const std::size_t dh = qv.cols() / heads;
        const T sc = T{1} / std::sqrt(static_cast<T>(dh));
        Matrix<T>* gq = tape.grad_sink(q);
        Matrix<T>* gk = tape.grad_sink(k);
        Matrix<T>* gv = tape.grad_sink(v);
        const auto& kern = kernels::active_table<T>();
        std::vector<T> dp(kv.rows());
        for (std::size_t h = 0; h < heads; ++h) {
          const Matrix<T>& p = probs[h];
          const std::size_t off = h * dh;
          for (std::size_t i = 0; i < qv.rows(); ++i) {
            const T* gi = g.row(i).data() + off;
            T dot_pd = T{0};
            for (std::size_t j = 0; j < kv.rows(); ++j) {
              const T pij = p(i, j);
              if (pij == T{0}) {
                dp[j] = T{0};
                continue;
              }
              dp[j] = kern.dot(gi, vv.row(j).data() + off, dh);
              dot_pd += pij * dp[j];
              if (gv != nullptr) kern.axpy(pij, gi, gv->row(j).data() + off, dh);
            }
            if (gq == nullptr && gk == nullptr) continue;
            for (std::size_t j = 0; j < kv.rows(); ++j) {
              const T pij = p(i, j);
              if (pij == T{0}) continue;
              const T ds = pij * (dp[j] - dot_pd) * sc;
              if (gq != nullptr) {
                kern.axpy(ds, kv.row(j).data() + off, gq->row(i).data() + off, dh);
              }
              if (gk != nullptr) {
                kern.axpy(ds, qv.row(i).data() + off, gk->row(j).data() + off, dh);
              }
            }
          }
        }
      });
}

template <typename T>
Var<T> concat_rows(std::span<const Var<T>> parts) {
  if (parts.empty()) throw UsageError("concat_rows: no inputs");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const Var<T>& p : parts) {
    if (p.cols() != cols) {
      throw ShapeError("concat_rows: width " + std::to_string(p.cols()) +
                       " differs from " + std::to_string(cols));
    }
    rows += p.rows();
  }
  std::vector<T> data;
  data.reserve(rows * cols);
  for (const Var<T>& p : parts) {
    auto s = p.value().data();
    data.insert(data.end(), s.begin(), s.end());
  }
  std::vector<Var<T>> kept(parts.begin(), parts.end());
  return parts.front().tape().record(
      Matrix<T>(rows, cols, std::move(data)), parts,
      [kept](Tape<T>& tape, const Matrix<T>& g) {
        std::size_t offset = 0;
        for (const Var<T>& p : kept) {
          if (auto* gp = tape.grad_sink(p)) {
            auto d = gp->data();
            auto s = g.data().subspan(offset * g.cols(), d.size());
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
          }
          offset += p.rows();
        }
      });
}

template <typename T>
Var<T> slice_rows(Var<T> a, std::size_t begin, std::size_t count) {
  if (begin + count > a.rows()) {
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside " +
                     a.value().shape_string());
  }
  const auto src = a.value().data().subspan(begin * a.cols(), count * a.cols());
  Matrix<T> out(count, a.cols(), std::vector<T>(src.begin(), src.end()));
  return a.tape().record(std::move(out), {a},
                         [a, begin](Tape<T>& tape, const Matrix<T>& g) {
                           if (auto* ga = tape.grad_sink(a)) {
                             auto d = ga->data().subspan(begin * g.cols(), g.size());
                             auto s = g.data();
                             for (std::size_t i = 0; i < s.size(); ++i) d[i] += s[i];
                           }
                         });
}

template <typename T>
Var<T> gather_rows(Var<T> table, std::span<const std::size_t> ids) {
  const Matrix<T>& tv = table.value();
  Matrix<T> out(ids.size(), tv.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= tv.rows()) {
      throw UsageError("gather_rows: id " + std::to_string(ids[r]) +
                       " outside table of " + std::to_string(tv.rows()) + " rows");
    }
    std::copy_n(tv.row(ids[r]).begin(), tv.cols(), out.row(r).begin());
  }
  std::vector<std::size_t> kept(ids.begin(), ids.end());
  return table.tape().record(std::move(out), {table},
                             [table, kept](Tape<T>& tape, const Matrix<T>& g) {
                               if (auto* gt = tape.grad_sink(table)) {
                                 for (std::size_t r = 0; r < kept.size(); ++r) {
                                   auto d = gt->row(kept[r]);
                                   auto s = g.row(r);
                                   for (std::size_t j = 0; j < s.size(); ++j) d[j] += s[j];
                                 }
                               }
                             });
}

template <typename T>
Var<T> l2_normalize_rows(Var<T> a) {
  const Matrix<T>& x = a.value();
  Matrix<T> out(x.rows(), x.cols());
  std::vector<T> norms(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double n = std::sqrt(kernels::sum_squares<T>(x.row(i)));
    if (!(n > 0.0)) {
      throw NumericError("l2_normalize_rows: row " + std::to_string(i) + " has zero norm");
    }
    norms[i] = static_cast<T>(n);
    auto src = x.row(i);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j] / norms[i];
  }
  Matrix<T> y = out;
  return a.tape().record(
      std::move(out), {a},
      [a, y = std::move(y), norms = std::move(norms)](Tape<T>& tape, const Matrix<T>& g) {
        Matrix<T>* ga = tape.grad_sink(a);
        if (ga == nullptr) return;
        for (std::size_t i = 0; i < y.rows(); ++i) {
          auto yi = y.row(i);
          auto gi = g.row(i);
          T dot = T{0};
          for (std::size_t j = 0; j < yi.size(); ++j) dot += yi[j] * gi[j];
          auto d = ga->row(i);
          for (std::size_t j = 0; j < yi.size(); ++j) {
            d[j] += (gi[j] - yi[j] * dot) / norms[i];
          }
        }
      });
}

// For row i with positive logit s_ii and negatives s_ij (j != i):
//   a = log(alpha) + s_ii
//   b = log(B-1) + LSE_j((1+beta) s_ij) - LSE_j(beta s_ij)
//   loss_i = logaddexp(a, b) - s_ii
// which equals -log(e^{s_ii} / (alpha e^{s_ii} + sum_j w_ij e^{s_ij})) with
// w_ij = (B-1) softmax_j(beta s_ij).
template <typename T>
Var<T> hn_nce_rows(Var<T> logits, T alpha, T beta) {
  const Matrix<T>& s = logits.value();
  const std::size_t b = s.rows();
  if (s.cols() != b) {
    throw ShapeError("hn_nce_rows: logits " + s.shape_string() + " are not square");
  }
  if (b < 2) throw UsageError("hn_nce_rows: batch size must be at least 2");
  if (!(alpha >= T{0}) || !(beta >= T{0})) {
    throw UsageError("hn_nce_rows: alpha and beta must be nonnegative");
  }
  const T neg_inf = -std::numeric_limits<T>::infinity();
  const T log_alpha = alpha > T{0} ? std::log(alpha) : neg_inf;
  const T log_negs = std::log(static_cast<T>(b - 1));

  // Per-row softmax weights over negatives and path responsibilities, kept
  // for the backward pass.
  Matrix<T> p_sharp(b, b);
  Matrix<T> p_soft(b, b);
  std::vector<T> resp_pos(b);
  Matrix<T> out(b, 1);
  for (std::size_t i = 0; i < b; ++i) {
    T m1 = neg_inf;
    T m2 = neg_inf;
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      m1 = std::max(m1, (T{1} + beta) * s(i, j));
      m2 = std::max(m2, beta * s(i, j));
    }
    T z1 = T{0};
    T z2 = T{0};
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      p_sharp(i, j) = std::exp((T{1} + beta) * s(i, j) - m1);
      p_soft(i, j) = std::exp(beta * s(i, j) - m2);
      z1 += p_sharp(i, j);
      z2 += p_soft(i, j);
    }
    for (std::size_t j = 0; j < b; ++j) {
      p_sharp(i, j) /= z1;
      p_soft(i, j) /= z2;
    }
    const T pos = log_alpha + s(i, i);
    const T neg = log_negs + (m1 + std::log(z1)) - (m2 + std::log(z2));
    const T total = log_add_exp(pos, neg);
    resp_pos[i] = alpha > T{0} ? std::exp(pos - total) : T{0};
    out(i, 0) = total - s(i, i);
  }
  return logits.tape().record(
      std::move(out), {logits},
      [logits, beta, p_sharp = std::move(p_sharp), p_soft = std::move(p_soft),
       resp_pos = std::move(resp_pos)](Tape<T>& tape, const Matrix<T>& g) {
        Matrix<T>* gs = tape.grad_sink(logits);
        if (gs == nullptr) return;
        const std::size_t b = resp_pos.size();
        for (std::size_t i = 0; i < b; ++i) {
          const T gi = g(i, 0);
          const T resp_neg = T{1} - resp_pos[i];
          (*gs)(i, i) += gi * (resp_pos[i] - T{1});
          for (std::size_t j = 0; j < b; ++j) {
            if (j == i) continue;
            (*gs)(i, j) += gi * resp_neg *
                           ((T{1} + beta) * p_sharp(i, j) - beta * p_soft(i, j));
          }
        }
      });
}

template <typename T>
Var<T> sum(Var<T> a) {
  T total = T{0};
  for (T v : a.value().data()) total += v;
  return a.tape().record(Matrix<T>(1, 1, total), {a},
                         [a](Tape<T>& tape, const Matrix<T>& g) {
                           if (auto* ga = tape.grad_sink(a)) {
                             for (T& v : ga->data()) v += g(0, 0);
                           }
                         });
}

template <typename T>
Var<T> mean(Var<T> a) {
  if (a.value().empty()) throw UsageError("mean of empty matrix");
  return scale(sum(a), T{1} / static_cast<T>(a.value().size()));
}

#define COMPFUSE_INSTANTIATE(T)                                              \
  template Var<T> matmul(Var<T>, Var<T>);                                   \
  template Var<T> matmul_nt(Var<T>, Var<T>);                                \
  template Var<T> transpose(Var<T>);                                        \
  template Var<T> add(Var<T>, Var<T>);                                      \
  template Var<T> sub(Var<T>, Var<T>);                                      \
  template Var<T> scale(Var<T>, T);                                         \
  template Var<T> add_row(Var<T>, Var<T>);                                  \
  template Var<T> gelu(Var<T>);                                             \
  template Var<T> layer_norm(Var<T>, Var<T>, Var<T>, T);                    \
  template Var<T> softmax_rows(Var<T>);                                     \
  template Var<T> attention(Var<T>, Var<T>, Var<T>, const TokenMask&,       \
                            std::size_t);                                   \
  template Var<T> concat_rows(std::span<const Var<T>>);                     \
  template Var<T> slice_rows(Var<T>, std::size_t, std::size_t);             \
  template Var<T> gather_rows(Var<T>, std::span<const std::size_t>);        \
  template Var<T> l2_normalize_rows(Var<T>);                                \
  template Var<T> hn_nce_rows(Var<T>, T, T);                                \
  template Var<T> sum(Var<T>);                                              \
  template Var<T> mean(Var<T>);

COMPFUSE_INSTANTIATE(float)
COMPFUSE_INSTANTIATE(double)
#undef COMPFUSE_INSTANTIATE

}  // namespace ops
}  // namespace compfuse
