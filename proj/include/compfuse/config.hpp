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
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "compfuse/contrastive.hpp"
#include "compfuse/model.hpp"
#include "compfuse/trainer.hpp"

namespace compfuse {

struct StageSettings {
  double learning_rate = 2e-4;
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
};

struct EvalSettings {
  std::vector<std::size_t> recall_ks{1, 5, 10, 50};
  std::vector<std::size_t> map_ks{5, 10, 25, 50};
  std::string split = "test";
  bool every_epoch = true;
};

struct DataSettings {
  std::string dir;
  std::string visual;  // overrides <dir>/visual.dump when set
};

struct RunConfig {
  std::uint64_t seed = 0;
  DataSettings data;
  ModelConfig model;
  LossConfig loss;
  OptimizerConfig optimizer;
  StageSettings stage1{2e-4, 10, 64};
  StageSettings stage2{1e-5, 10, 64};
  std::string stages = "both";  // "1", "2" or "both"
  EvalSettings eval;
  std::string out = "run";

  // ConfigError on the first violated constraint.
  void validate() const;

  // Fully resolved form, defaults included.
  nlohmann::ordered_json to_json() const;
  // Strict: unknown keys anywhere raise ConfigError.
  static RunConfig from_json(const nlohmann::ordered_json& j);
  static RunConfig load(const std::filesystem::path& path);

  // FNV-1a over the resolved JSON without "out" and "stages".
  std::uint64_t hash() const;
};

std::vector<std::size_t> parse_k_list(const std::string& text);

}  // namespace compfuse
