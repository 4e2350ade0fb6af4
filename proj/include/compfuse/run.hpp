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
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "compfuse/checkpoint.hpp"
#include "compfuse/config.hpp"
#include "compfuse/pipeline.hpp"
#include "compfuse/trainer.hpp"

namespace compfuse {

struct LoadedData {
  DataBundle bundle;
  TrainingData training;
};

// Loads the dataset named by the config, fills model.vocab_size when it is
// zero, and resolves the train and evaluation splits.
LoadedData load_training_data(RunConfig& cfg);

struct TrainOptions {
  std::string resume;                           // checkpoint path
  std::optional<std::size_t> halt_after_epochs;  // epochs run by this call
  std::ostream* log = nullptr;
};

struct TrainOutcome {
  RunConfig config;  // resolved
  FusionModel<float> model;
  TrainState state;
  TwoStageResult result;
  std::optional<EvalReport> eval;
  nlohmann::ordered_json report;
};

// Layout under config.out:
//   config.resolved.json  train_report.json  eval_report.json  final.ckpt
//   checkpoints/latest.ckpt (every epoch)  checkpoints/stage1.ckpt
TrainOutcome run_training(RunConfig cfg, const TrainOptions& options = {});

EvalOptions eval_options(const EvalSettings& s, FusionMode mode);

struct EvalRequest {
  std::string checkpoint;  // empty: freshly initialized model from `model` and `seed`
  DataSettings data;
  EvalSettings eval;
  FusionMode mode = FusionMode::kModel;
  ModelConfig model;
  std::uint64_t seed = 0;
  bool infer_dim = false;  // fresh model takes its width from the dump
};

EvalReport run_evaluation(const EvalRequest& request);

}  // namespace compfuse
