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

#include <atomic>
#include <cstdlib>
#include <string>

#include "compfuse/errors.hpp"
#include "compfuse/kernels.hpp"

#if !defined(COMPFUSE_HAVE_AVX2)
namespace compfuse::kernels::detail {
template <>
const KernelTable<float>* avx2_table<float>() {
  return nullptr;
}
template <>
const KernelTable<double>* avx2_table<double>() {
  return nullptr;
}
}  // namespace compfuse::kernels::detail
#endif

namespace compfuse::kernels {
namespace {

Backend initial_backend() {
  const char* env = std::getenv("COMPFUSE_KERNELS");
  const std::string choice = env != nullptr ? env : "auto";
  if (choice == "scalar") return Backend::kScalar;
  if (choice == "avx2" && !avx2_available()) {
    throw UsageError("COMPFUSE_KERNELS=avx2 but the CPU lacks AVX2/FMA");
  }
  return avx2_available() ? Backend::kAvx2 : Backend::kScalar;
}

std::atomic<Backend>& backend_slot() {
  static std::atomic<Backend> slot{initial_backend()};
  return slot;
}

}  // namespace

bool avx2_available() {
#if defined(COMPFUSE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool kAvailable =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return kAvailable;
#else
  return false;
#endif
}

Backend active_backend() { return backend_slot().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  if (backend == Backend::kAvx2 && !avx2_available()) {
    throw UsageError("AVX2 kernels requested but not available on this CPU");
  }
  backend_slot().store(backend, std::memory_order_relaxed);
}

std::string_view backend_name(Backend backend) {
  return backend == Backend::kAvx2 ? "avx2" : "scalar";
}

template <typename T>
const KernelTable<T>& table(Backend backend) {
  if (backend == Backend::kAvx2) {
    const KernelTable<T>* t = detail::avx2_table<T>();
    if (t == nullptr || !avx2_available()) {
      throw UsageError("AVX2 kernels requested but not available");
    }
    return *t;
  }
  return detail::scalar_table<T>();
}

template <typename T>
const KernelTable<T>& active_table() {
  if (active_backend() == Backend::kAvx2) return *detail::avx2_table<T>();
  return detail::scalar_table<T>();
}

template const KernelTable<float>& table<float>(Backend);
template const KernelTable<double>& table<double>(Backend);
template const KernelTable<float>& active_table<float>();
template const KernelTable<double>& active_table<double>();

}  // namespace compfuse::kernels
