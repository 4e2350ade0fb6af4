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
#include <cstdint>
#include <string>

#include "compfuse/contrastive.hpp"
#include "compfuse/gradcheck.hpp"

namespace compfuse {

struct GradientSuiteOptions {
  std::uint64_t seed = 0;
  std::size_t dim = 8;
  std::size_t heads = 2;
  std::size_t path1_blocks = 2;
  std::size_t batch = 3;
  std::size_t max_len = 5;  // longest sequence, class token included
  double init_std = 0.25;
  double epsilon = 1e-3;
  double tolerance = 1e-4;
  LossConfig loss;
  std::string corrupt;     // tensor whose analytic gradient gets perturbed
  bool no_params = false;  // freeze everything
};

// Full forward (text encoder, both fusion paths, dual-target loss) in 64-bit
// on a random batch. Fusion and query-text tensors are checked; the caption
// encoder stays frozen.
GradCheckReport run_gradient_suite(const GradientSuiteOptions& options);

}  // namespace compfuse
