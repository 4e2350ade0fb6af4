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

#include "compfuse/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "compfuse/errors.hpp"
#include "compfuse/kernels.hpp"

namespace compfuse {

template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + a.shape_string() + " by " +
                     b.shape_string());
  }
  Matrix<T> out(a.rows(), b.cols());
  const auto& k = kernels::active_table<T>();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    T* dst = out.row(i).data();
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const T s = a(i, p);
      if (s != T{0}) k.axpy(s, b.row(p).data(), dst, b.cols());
    }
  }
  return out;
}

template <typename T>
Matrix<T> matmul_nt(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: cannot multiply " + a.shape_string() +
                     " by transpose of " + b.shape_string());
  }
  Matrix<T> out(a.rows(), b.rows());
  const auto& k = kernels::active_table<T>();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      out(i, j) = k.dot(a.row(i).data(), b.row(j).data(), a.cols());
    }
  }
  return out;
}

template <typename T>
Matrix<T> matmul_tn(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: cannot multiply transpose of " +
                     a.shape_string() + " by " + b.shape_string());
  }
  Matrix<T> out(a.cols(), b.cols());
  const auto& k = kernels::active_table<T>();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const T s = a(i, p);
      if (s != T{0}) k.axpy(s, b.row(i).data(), out.row(p).data(), b.cols());
    }
  }
  return out;
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& m) {
  Matrix<T> out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  }
  return out;
}

template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& m) {
  if (m.empty()) throw UsageError("softmax_rows on empty matrix");
  Matrix<T> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto in = m.row(i);
    auto dst = out.row(i);
    const T mx = *std::max_element(in.begin(), in.end());
    T sum = T{0};
    for (std::size_t j = 0; j < in.size(); ++j) {
      dst[j] = std::exp(in[j] - mx);
      sum += dst[j];
    }
    for (T& v : dst) v /= sum;
  }
  return out;
}

template <typename T>
Matrix<T> layer_norm_rows(const Matrix<T>& m, std::span<const T> gain,
                          std::span<const T> bias, T eps) {
  if (gain.size() != m.cols() || bias.size() != m.cols()) {
    throw ShapeError("layer_norm_rows: gain/bias length does not match " +
                     m.shape_string());
  }
  Matrix<T> out(m.rows(), m.cols());
  const T n = static_cast<T>(m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto in = m.row(i);
    T mean = T{0};
    for (T v : in) mean += v;
    mean /= n;
    T var = T{0};
    for (T v : in) var += (v - mean) * (v - mean);
    var /= n;
    const T inv = T{1} / std::sqrt(var + eps);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < in.size(); ++j) {
      dst[j] = (in[j] - mean) * inv * gain[j] + bias[j];
    }
  }
  return out;
}

template <typename T>
T gelu(T x) {
  return T{0.5} * x * (T{1} + std::erf(x / std::numbers::sqrt2_v<T>));
}

template <typename T>
T gelu_derivative(T x) {
  const T cdf = T{0.5} * (T{1} + std::erf(x / std::numbers::sqrt2_v<T>));
  const T pdf = std::exp(T{-0.5} * x * x) * std::numbers::inv_sqrtpi_v<T> /
                std::numbers::sqrt2_v<T>;
  return cdf + x * pdf;
}

template <typename T>
Matrix<T> gelu(const Matrix<T>& m) {
  Matrix<T> out(m.rows(), m.cols());
  auto src = m.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = gelu(src[i]);
  return out;
}

template <typename T>
std::vector<Matrix<T>> attention_probabilities(const Matrix<T>& q,
                                               const Matrix<T>& k,
                                               const TokenMask& kv_mask,
                                               std::size_t heads) {
  if (q.cols() != k.cols()) {
    throw ShapeError("attention: query " + q.shape_string() +
                     " and key " + k.shape_string() + " widths differ");
  }
  if (kv_mask.size() != k.rows()) {
    throw ShapeError("attention: mask length does not match key rows");
  }
  if (heads == 0 || q.cols() % heads != 0) {
    throw ShapeError("attention: width " + std::to_string(q.cols()) +
                     " not divisible by " + std::to_string(heads) + " heads");
  }
  if (std::none_of(kv_mask.begin(), kv_mask.end(), [](auto b) { return b != 0; })) {
    throw UsageError("attention: every key token is masked");
  }
  const std::size_t dh = q.cols() / heads;
  const T scale = T{1} / std::sqrt(static_cast<T>(dh));
  const auto& kern = kernels::active_table<T>();
  std::vector<Matrix<T>> probs;
  probs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Matrix<T> p(q.rows(), k.rows());
    for (std::size_t i = 0; i < q.rows(); ++i) {
      const T* qi = q.row(i).data() + h * dh;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t j = 0; j < k.rows(); ++j) {
        if (!kv_mask[j]) continue;
        p(i, j) = kern.dot(qi, k.row(j).data() + h * dh, dh) * scale;
        mx = std::max(mx, p(i, j));
      }
      T sum = T{0};
      for (std::size_t j = 0; j < k.rows(); ++j) {
        if (!kv_mask[j]) {
          p(i, j) = T{0};
          continue;
        }
        p(i, j) = std::exp(p(i, j) - mx);
        sum += p(i, j);
      }
      for (std::size_t j = 0; j < k.rows(); ++j) p(i, j) /= sum;
    }
    probs.push_back(std::move(p));
  }
  return probs;
}

template <typename T>
Matrix<T> attention_combine(const std::vector<Matrix<T>>& probs,
                            const Matrix<T>& v, std::size_t heads) {
  const std::size_t dh = v.cols() / heads;
  const std::size_t lq = probs.front().rows();
  Matrix<T> out(lq, v.cols());
  const auto& kern = kernels::active_table<T>();
  for (std::size_t h = 0; h < heads; ++h) {
    const Matrix<T>& p = probs[h];
    for (std::size_t i = 0; i < lq; ++i) {
      T* dst = out.row(i).data() + h * dh;
      for (std::size_t j = 0; j < v.rows(); ++j) {
        const T w = p(i, j);
        if (w != T{0}) kern.axpy(w, v.row(j).data() + h * dh, dst, dh);
      }
    }
  }
  return out;
}

#define COMPFUSE_INSTANTIATE(T)                                                  \
  template Matrix<T> matmul(const Matrix<T>&, const Matrix<T>&);                \
  template Matrix<T> matmul_nt(const Matrix<T>&, const Matrix<T>&);             \
  template Matrix<T> matmul_tn(const Matrix<T>&, const Matrix<T>&);             \
  template Matrix<T> transpose(const Matrix<T>&);                               \
  template Matrix<T> softmax_rows(const Matrix<T>&);                            \
  template Matrix<T> layer_norm_rows(const Matrix<T>&, std::span<const T>,      \
                                     std::span<const T>, T);                    \
  template T gelu(T);                                                           \
  template T gelu_derivative(T);                                                \
  template Matrix<T> gelu(const Matrix<T>&);                                    \
  template std::vector<Matrix<T>> attention_probabilities(                      \
      const Matrix<T>&, const Matrix<T>&, const TokenMask&, std::size_t);       \
  template Matrix<T> attention_combine(const std::vector<Matrix<T>>&,           \
                                       const Matrix<T>&, std::size_t);

COMPFUSE_INSTANTIATE(float)
COMPFUSE_INSTANTIATE(double)
#undef COMPFUSE_INSTANTIATE

}  // namespace compfuse
