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

// Value-level dense operations. These are the forward halves of the tape
// operations in tape.hpp and are also used directly for inference.

#include <cstdint>
#include <span>
#include <vector>

#include "compfuse/matrix.hpp"

namespace compfuse {

// One byte per token; nonzero marks a valid token.
using TokenMask = std::vector<std::uint8_t>;

template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b);

// a * b^T
template <typename T>
Matrix<T> matmul_nt(const Matrix<T>& a, const Matrix<T>& b);

// a^T * b
template <typename T>
Matrix<T> matmul_tn(const Matrix<T>& a, const Matrix<T>& b);

template <typename T>
Matrix<T> transpose(const Matrix<T>& m);

// Row-wise softmax with max subtraction.
template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& m);

// Row-wise layer normalization with population variance, then per-column
// affine transform.
template <typename T>
Matrix<T> layer_norm_rows(const Matrix<T>& m, std::span<const T> gain,
                          std::span<const T> bias, T eps);

// Exact GELU: x * Phi(x).
template <typename T>
T gelu(T x);
template <typename T>
T gelu_derivative(T x);
template <typename T>
Matrix<T> gelu(const Matrix<T>& m);

// Per-head attention probabilities for projected queries (Lq x d) and keys
// (Lk x d). Head h uses columns [h*d/heads, (h+1)*d/heads). Keys with a zero
// mask entry get exactly zero weight. Returns one (Lq x Lk) matrix per head.
template <typename T>
std::vector<Matrix<T>> attention_probabilities(const Matrix<T>& q,
                                               const Matrix<T>& k,
                                               const TokenMask& kv_mask,
                                               std::size_t heads);

// Per-head weighted sum of values, heads concatenated along columns.
template <typename T>
Matrix<T> attention_combine(const std::vector<Matrix<T>>& probs,
                            const Matrix<T>& v, std::size_t heads);

}  // namespace compfuse
