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

#include "compfuse/kernels.hpp"

namespace compfuse::kernels::detail {
namespace {

template <typename T>
T dot_scalar(const T* a, const T* b, std::size_t n) {
  T acc = T{0};
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
void axpy_scalar(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
double sum_squares_scalar(const T* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = static_cast<double>(a[i]);
    acc += v * v;
  }
  return acc;
}

template <typename T>
double dot_wide_scalar(const T* a, const T* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

}  // namespace

template <typename T>
const KernelTable<T>& scalar_table() {
  static const KernelTable<T> kTable{&dot_scalar<T>, &axpy_scalar<T>,
                                     &sum_squares_scalar<T>,
                                     &dot_wide_scalar<T>};
  return kTable;
}

template const KernelTable<float>& scalar_table<float>();
template const KernelTable<double>& scalar_table<double>();

}  // namespace compfuse::kernels::detail
