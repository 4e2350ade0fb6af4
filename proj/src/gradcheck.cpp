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

#include "compfuse/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "compfuse/errors.hpp"

namespace compfuse {

std::vector<FiniteDifferenceGrad> finite_difference_grad(
    const std::function<double()>& loss_fn, ParamStore<double>& store, double epsilon) {
  if (!(epsilon > 0.0)) throw UsageError("finite_difference_grad: epsilon must be > 0");
  std::vector<FiniteDifferenceGrad> out;
  for (auto& p : store) {
    if (!p.trainable) continue;
    MatrixD g(p.value.rows(), p.value.cols());
    auto values = p.value.data();
    auto dst = g.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + epsilon;
      const double up = loss_fn();
      values[i] = saved - epsilon;
      const double down = loss_fn();
      values[i] = saved;
      dst[i] = (up - down) / (2.0 * epsilon);
    }
    out.push_back({p.name, std::move(g)});
  }
  return out;
}

double relative_error(const MatrixD& analytic, const MatrixD& numeric) {
  if (!analytic.same_shape(numeric)) throw ShapeError("relative_error: shape mismatch");
  double diff = 0.0;
  double na = 0.0;
  double nn = 0.0;
  auto a = analytic.data();
  auto n = numeric.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  const double denom = std::max(std::sqrt(na), std::sqrt(nn));
  if (denom == 0.0) return 0.0;
  return std::sqrt(diff) / denom;
}

bool GradCheckReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const GradCheckRow& r) { return r.passed; });
}

GradCheckReport check_gradients(const std::function<double()>& loss_fn,
                                const std::function<void()>& backward_fn,
                                ParamStore<double>& store, double epsilon,
                                double tolerance) {
  store.zero_grad();
  backward_fn();
  std::vector<MatrixD> analytic;
  for (const auto& p : store) {
    if (p.trainable) analytic.push_back(p.grad);
  }
  const auto numeric = finite_difference_grad(loss_fn, store, epsilon);
  GradCheckReport report;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    GradCheckRow row;
    row.name = numeric[i].name;
    row.elements = numeric[i].grad.size();
    auto a = analytic[i].data();
    auto n = numeric[i].grad.data();
    for (std::size_t j = 0; j < a.size(); ++j) {
      row.max_abs_error = std::max(row.max_abs_error, std::abs(a[j] - n[j]));
    }
    row.relative_error = relative_error(analytic[i], numeric[i].grad);
    row.passed = row.relative_error < tolerance;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace compfuse
