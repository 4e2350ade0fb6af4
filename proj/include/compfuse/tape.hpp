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

// Reverse-mode differentiation over an explicitly recorded tape.
//
// Every differentiable operation appends a node holding its value and a
// closure that maps the node's incoming gradient onto its parents. Parameter
// leaves forward their accumulated gradient into ParamTensor::grad at the
// end of backward(); non-trainable parameters and constants never receive
// one. A tape built with record=false keeps values only, which is what
// inference and frozen encoders use.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "compfuse/matrix.hpp"
#include "compfuse/numerics.hpp"
#include "compfuse/param_store.hpp"

namespace compfuse {

template <typename T>
class Tape;

template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  std::size_t id() const { return id_; }
  Tape<T>& tape() const { return *tape_; }
  const Matrix<T>& value() const { return tape_->value(id_); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix<T>& out_grad)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var<T> constant(Matrix<T> value);
  // Leaf bound to a parameter. The tensor must outlive backward().
  Var<T> param(ParamTensor<T>& p);

  // Appends an operation result. The closure is kept only if recording and
  // at least one parent needs a gradient. Throws NumericError when the
  // value contains NaN or Inf.
  Var<T> record(Matrix<T> value, std::span<const Var<T>> parents, BackwardFn fn);
  Var<T> record(Matrix<T> value, std::initializer_list<Var<T>> parents,
                BackwardFn fn) {
    return record(std::move(value), std::span<const Var<T>>(parents.begin(), parents.size()),
                  std::move(fn));
  }

  const Matrix<T>& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  bool requires_grad(Var<T> v) const { return requires_grad(v.id()); }

  // Gradient accumulator for a node, allocated on first use. Returns
  // nullptr for nodes that do not need a gradient.
  Matrix<T>* grad_sink(std::size_t id);
  Matrix<T>* grad_sink(Var<T> v) { return grad_sink(v.id()); }

  // Gradient of the last backward() output with respect to v, or nullptr.
  const Matrix<T>* grad(Var<T> v) const;

  // Requires a 1x1 output produced on this tape.
  void backward(Var<T> output);

 private:
  struct Node {
    Matrix<T> value;
    Matrix<T> grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
    ParamTensor<T>* param = nullptr;
  };

  bool record_;
  std::vector<Node> nodes_;
};

namespace ops {

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);
// a * b^T
template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b);
template <typename T>
Var<T> transpose(Var<T> a);
template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> sub(Var<T> a, Var<T> b);
template <typename T>
Var<T> scale(Var<T> a, T factor);
// Adds a (1 x cols) row to every row of a.
template <typename T>
Var<T> add_row(Var<T> a, Var<T> row);
template <typename T>
Var<T> gelu(Var<T> a);
template <typename T>
Var<T> layer_norm(Var<T> a, Var<T> gain, Var<T> bias, T eps);
template <typename T>
Var<T> softmax_rows(Var<T> a);
// Scaled dot-product attention over already projected q, k, v, split into
// heads along columns. Masked keys get zero weight.
template <typename T>
Var<T> attention(Var<T> q, Var<T> k, Var<T> v, const TokenMask& kv_mask,
                 std::size_t heads);
template <typename T>
Var<T> concat_rows(std::span<const Var<T>> parts);
template <typename T>
Var<T> slice_rows(Var<T> a, std::size_t begin, std::size_t count);
template <typename T>
Var<T> row(Var<T> a, std::size_t index) {
  return slice_rows(a, index, 1);
}
// Row lookup; out-of-range ids are a UsageError.
template <typename T>
Var<T> gather_rows(Var<T> table, std::span<const std::size_t> ids);
// Zero-norm rows raise NumericError. Norms accumulate in double.
template <typename T>
Var<T> l2_normalize_rows(Var<T> a);
// Per-row hard-negative-weighted contrastive loss over a square logit
// matrix whose diagonal holds the positives. Output is (B x 1).
template <typename T>
Var<T> hn_nce_rows(Var<T> logits, T alpha, T beta);
template <typename T>
Var<T> sum(Var<T> a);
template <typename T>
Var<T> mean(Var<T> a);

}  // namespace ops
}  // namespace compfuse
