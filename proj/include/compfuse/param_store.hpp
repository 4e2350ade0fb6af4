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

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "compfuse/errors.hpp"
#include "compfuse/matrix.hpp"

namespace compfuse {

template <typename T>
struct ParamTensor {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;
  bool trainable = true;
  // Set when backward() deposits a gradient; cleared by zero_grad().
  bool has_grad = false;
};

// Ordered collection of named parameters. Index handles returned by add()
// stay valid for the store's lifetime and across copies, so parameter
// structs hold indices rather than pointers.
template <typename T>
class ParamStore {
 public:
  using ParamId = std::size_t;

  ParamId add(std::string name, Matrix<T> value, bool trainable = true) {
    if (index_.contains(name)) {
      throw UsageError("duplicate parameter name '" + name + "'");
    }
    const ParamId id = params_.size();
    index_.emplace(name, id);
    Matrix<T> grad(value.rows(), value.cols());
    params_.push_back(
        ParamTensor<T>{std::move(name), std::move(value), std::move(grad), trainable, false});
    return id;
  }

  ParamTensor<T>& operator[](ParamId id) { return params_.at(id); }
  const ParamTensor<T>& operator[](ParamId id) const { return params_.at(id); }

  ParamTensor<T>& at(const std::string& name) { return params_[id_of(name)]; }
  const ParamTensor<T>& at(const std::string& name) const {
    return params_[id_of(name)];
  }

  ParamId id_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw UsageError("unknown parameter '" + name + "'");
    return it->second;
  }
  bool contains(const std::string& name) const { return index_.contains(name); }

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad() {
    for (auto& p : params_) {
      p.grad.fill(T{0});
      p.has_grad = false;
    }
  }

  void set_all_trainable(bool trainable) {
    for (auto& p : params_) p.trainable = trainable;
  }

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& p : params_) out.add(p.name, p.value.template cast<U>(), p.trainable);
    return out;
  }

 private:
  std::vector<ParamTensor<T>> params_;
  std::unordered_map<std::string, ParamId> index_;
};

}  // namespace compfuse
