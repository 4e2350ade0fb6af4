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

#include <gtest/gtest.h>

#include <chrono>
#include <string>

#include "compfuse/gradient_suite.hpp"

namespace compfuse {
namespace {

double rel_error_of(const GradCheckReport& r, const std::string& name) {
  for (const auto& row : r.rows) {
    if (row.name == name) return row.relative_error;
  }
  ADD_FAILURE() << "no row for " << name;
  return 0.0;
}

TEST(GradientSuite, EveryTrainableTensorPassesOnThreeSeeds) {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    GradientSuiteOptions opt;
    opt.seed = seed;
    const auto start = std::chrono::steady_clock::now();
    const auto report = run_gradient_suite(opt);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_LT(secs, 120.0);
    EXPECT_GT(report.rows.size(), 80u);
    for (const auto& row : report.rows) {
      EXPECT_LT(row.relative_error, 1e-4) << "seed " << seed << " " << row.name;
    }
    EXPECT_TRUE(report.passed());
  }
}

// At a 0.02 parameter scale the embedding-table mismatch is central-difference
// truncation: it shrinks a hundredfold per tenfold smaller step.
TEST(GradientSuite, SmallInitMismatchScalesWithStepSquared) {
  GradientSuiteOptions opt;
  opt.init_std = 0.02;
  opt.epsilon = 1e-2;
  const double coarse = rel_error_of(run_gradient_suite(opt), "text.token_embedding");
  opt.epsilon = 1e-3;
  const double fine = rel_error_of(run_gradient_suite(opt), "text.token_embedding");
  EXPECT_GT(coarse / fine, 50.0);
  EXPECT_LT(coarse / fine, 200.0);
  opt.epsilon = 1e-4;
  EXPECT_LT(rel_error_of(run_gradient_suite(opt), "text.token_embedding"), 1e-4);
}

TEST(GradientSuite, CorruptedGradientIsDetected) {
  GradientSuiteOptions opt;
  opt.corrupt = "text.block.ln3_gain";
  const auto report = run_gradient_suite(opt);
  EXPECT_FALSE(report.passed());
  for (const auto& row : report.rows) EXPECT_EQ(row.passed, row.name != opt.corrupt) << row.name;
}

}  // namespace
}  // namespace compfuse
