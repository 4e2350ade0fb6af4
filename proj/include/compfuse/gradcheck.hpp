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

#include <functional>
#include <string>
#include <vector>

#include "compfuse/matrix.hpp"
#include "compfuse/param_store.hpp"

namespace compfuse {

struct FiniteDifferenceGrad {
  std::string name;
  MatrixD grad;
};

// Central-difference estimate (loss(p+eps) - loss(p-eps)) / (2 eps) for every
// scalar of every trainable parameter, in store order. Values are restored
// after each probe.
std::vector<FiniteDifferenceGrad> finite_difference_grad(
    const std::function<double()>& loss_fn, ParamStore<double>& store, double epsilon);

struct GradCheckRow {
  std::string name;
  std::size_t elements = 0;
  double max_abs_error = 0.0;
  // ||analytic - numeric||_2 / max(||analytic||_2, ||numeric||_2)
  double relative_error = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  bool passed() const;
};

// Runs backward through loss_fn's tape, compares against the finite
// difference oracle and reports one row per trainable tensor. loss_fn must
// rebuild its graph from the store on every call and return the scalar loss
// value; analytic gradients are read from ParamTensor::grad after the
// backward_fn call.
GradCheckReport check_gradients(const std::function<double()>& loss_fn,
                                const std::function<void()>& backward_fn,
                                ParamStore<double>& store, double epsilon,
                                double tolerance);

double relative_error(const MatrixD& analytic, const MatrixD& numeric);

}  // namespace compfuse
