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

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "compfuse/errors.hpp"

namespace compfuse {

// Dense row-major matrix. Training runs in float, verification in double.
template <typename T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{0})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string());
    }
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<T>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<T> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw ShapeError("ragged row in matrix literal");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Matrix(r, c, std::move(data));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  const std::vector<T>& storage() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  std::string shape_string() const {
    return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  template <typename U>
  Matrix<U> cast() const {
    std::vector<U> out(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return Matrix<U>(rows_, cols_, std::move(out));
  }

  bool all_finite() const {
    for (T v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using MatrixF = Matrix<float>;
using MatrixD = Matrix<double>;

}  // namespace compfuse
