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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "compfuse/model.hpp"
#include "compfuse/trainer.hpp"

namespace compfuse {

std::uint64_t fnv1a64(std::string_view bytes);

// Little-endian binary layout:
//   "CRCKPT01" u32 version u64 config_hash u32 stage u64 epochs_completed
//   u64 optimizer_step str rng_state str model_config_json str history_json
//   u32 tensor_count, then per tensor:
//   str name u8 trainable u32 rows u32 cols f32[rows*cols]
//   u8 has_moments [f32[rows*cols] m, f32[rows*cols] v]
// where str is u32 length followed by raw bytes.
struct Checkpoint {
  static constexpr char kMagic[9] = "CRCKPT01";
  static constexpr std::uint32_t kVersion = 1;

  std::uint64_t config_hash = 0;
  ModelConfig model_config;
  TrainState state;
  ParamStore<float> params;

  static Checkpoint capture(const FusionModel<float>& model, const TrainState& state,
                            std::uint64_t config_hash);

  std::string serialize() const;
  static Checkpoint parse(std::span<const char> bytes);

  // Model with this checkpoint's tensors and trainable flags. DataError when
  // the stored tensors do not match the architecture.
  FusionModel<float> restore_model() const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace compfuse
