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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "compfuse/contrastive.hpp"
#include "compfuse/model.hpp"
#include "compfuse/pipeline.hpp"
#include "compfuse/rng.hpp"

namespace compfuse {

struct OptimizerConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.05;
  double clip_norm = 1.0;  // <= 0 disables clipping

  void validate() const;
};

struct StagePlan {
  int stage_id = 1;
  std::vector<std::string> trainable_param_names;
  double learning_rate = 2e-4;
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

// Stage 1 trains the fusion adapter; stage 2 adds the query text encoder.
template <typename T>
StagePlan make_stage_plan(int stage_id, const FusionModel<T>& model, double learning_rate,
                          std::size_t epochs, std::size_t batch_size, std::uint64_t seed);

template <typename T>
struct OptimizerState {
  std::uint64_t step = 0;
  // Indexed by parameter id. Empty matrices for untouched tensors.
  std::vector<Matrix<T>> m;
  std::vector<Matrix<T>> v;

  void reset(const ParamStore<T>& store);
};

// One decoupled-weight-decay Adam update over the plan's tensors. Throws
// InternalError when one of them carries no gradient.
template <typename T>
void adamw_step(ParamStore<T>& store, const StagePlan& plan, const OptimizerConfig& cfg,
                OptimizerState<T>& state);

// Scales the plan's gradients so their global L2 norm is at most max_norm.
// Returns the norm before scaling.
template <typename T>
double clip_grad_norm(ParamStore<T>& store, const std::vector<std::string>& names,
                      double max_norm);

struct TrainerConfig {
  LossConfig loss;
  OptimizerConfig optimizer;
  bool eval_each_epoch = true;
};

struct TrainingData {
  Gallery gallery;
  std::vector<ResolvedTriplet> train;
  std::vector<ResolvedTriplet> eval;
};

// Everything needed to continue a run after a restart.
struct TrainState {
  int stage = 1;
  std::size_t epochs_completed = 0;
  OptimizerState<float> optimizer;
  Rng rng;
  nlohmann::ordered_json history = nlohmann::ordered_json::array();
};

struct EpochEvent {
  int stage = 1;
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  std::optional<double> recall_at_1;
};

struct TrainHooks {
  // Called after every epoch with the state already advanced. Returning
  // false halts the run.
  std::function<bool(const EpochEvent&, const TrainState&)> on_epoch_end;
};

struct FreezeAudit {
  std::size_t tensors_checked = 0;
  std::vector<std::string> changed;
  bool passed() const { return changed.empty(); }
};

struct StageReport {
  int stage = 1;
  std::vector<double> epoch_loss;
  std::vector<double> epoch_recall_at_1;
  FreezeAudit audit;
  bool halted = false;
};

// Runs (or continues) the stage recorded in `state`. Non-plan tensors are
// snapshotted on entry and audited bit-for-bit on exit.
StageReport run_stage(const StagePlan& plan, const TrainingData& data, FusionModel<float>& model,
                      const TrainerConfig& cfg, TrainState& state, const TrainHooks& hooks = {});

struct TwoStageResult {
  std::vector<StageReport> stages;
  std::vector<int> skipped;
  std::vector<std::string> warnings;
  FreezeAudit caption_audit;  // caption encoder across the whole run
  bool halted = false;

  nlohmann::ordered_json to_json(const TrainState& state) const;
};

// Runs the listed plans in order, resuming from `state`. Plans whose stage
// id is below state.stage are treated as complete.
TwoStageResult run_two_stage(const std::vector<StagePlan>& plans, const TrainingData& data,
                             FusionModel<float>& model, const TrainerConfig& cfg,
                             TrainState& state, const TrainHooks& hooks = {});

}  // namespace compfuse
