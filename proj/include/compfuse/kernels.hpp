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

// Data-parallel inner loops used by every dense operation in the library.
//
// Each kernel has a portable scalar reference version and an AVX2+FMA
// version. The variant is chosen once at runtime from CPU capabilities and
// the COMPFUSE_KERNELS environment variable ("scalar", "avx2" or "auto");
// tests can switch explicitly with set_backend(). The two variants agree up
// to floating-point reassociation, which kernel_equivalence_test pins down.

#include <cstddef>
#include <span>
#include <string_view>

namespace compfuse::kernels {

enum class Backend { kScalar, kAvx2 };

template <typename T>
struct KernelTable {
  // sum_i a[i] * b[i], accumulated in T.
  T (*dot)(const T* a, const T* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(T alpha, const T* x, T* y, std::size_t n);
  // sum_i a[i]^2, accumulated in double.
  double (*sum_squares)(const T* a, std::size_t n);
  // sum_i a[i] * b[i], accumulated in double.
  double (*dot_wide)(const T* a, const T* b, std::size_t n);
};

bool avx2_available();
Backend active_backend();
// Throws UsageError when the requested backend is not supported by the CPU.
void set_backend(Backend backend);
std::string_view backend_name(Backend backend);

template <typename T>
const KernelTable<T>& table(Backend backend);

template <typename T>
const KernelTable<T>& active_table();

template <typename T>
inline T dot(std::span<const T> a, std::span<const T> b) {
  return active_table<T>().dot(a.data(), b.data(), a.size());
}

template <typename T>
inline void axpy(T alpha, std::span<const T> x, std::span<T> y) {
  active_table<T>().axpy(alpha, x.data(), y.data(), x.size());
}

template <typename T>
inline double sum_squares(std::span<const T> a) {
  return active_table<T>().sum_squares(a.data(), a.size());
}

template <typename T>
inline double dot_wide(std::span<const T> a, std::span<const T> b) {
  return active_table<T>().dot_wide(a.data(), b.data(), a.size());
}

namespace detail {
template <typename T>
const KernelTable<T>& scalar_table();
template <typename T>
const KernelTable<T>* avx2_table();  // nullptr when not compiled in
}  // namespace detail

}  // namespace compfuse::kernels
