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
#include <string>
#include <vector>

#include <json.hpp>

#include "compfuse/encoders.hpp"
#include "compfuse/fusion.hpp"

namespace compfuse {

inline constexpr const char* kFusionPrefix = "fusion";
inline constexpr const char* kTextPrefix = "text";
inline constexpr const char* kCaptionPrefix = "caption";

struct ModelConfig {
  BlockDims dims;
  std::size_t path1_blocks = 2;
  std::size_t vocab_size = 0;
  std::size_t max_len = 16;
  bool use_caption = true;

  void validate() const;
};

nlohmann::ordered_json to_json(const ModelConfig& cfg);
// Rejects unknown keys; missing keys keep their defaults.
ModelConfig model_config_from_json(const nlohmann::ordered_json& j);

// Fusion adapter plus the query-text surrogate encoder and its frozen
// caption-path copy, all in one parameter store.
template <typename T>
struct FusionModel {
  ModelConfig config;
  ParamStore<T> store;
  FusionParams fusion;
  SurrogateTextEncoderParams text;
  SurrogateTextEncoderParams caption;

  // Fusion tensors start trainable; both text encoders start frozen. The
  // caption encoder is an exact copy of the initial text encoder.
  static FusionModel create(const ModelConfig& config, std::uint64_t seed);

  std::vector<std::string> fusion_names() const {
    return fusion_param_names(config.path1_blocks);
  }
  std::vector<std::string> text_names() const { return text_encoder_param_names(kTextPrefix); }
  std::vector<std::string> caption_names() const {
    return text_encoder_param_names(kCaptionPrefix);
  }

  template <typename U>
  FusionModel<U> cast() const {
    FusionModel<U> out;
    out.config = config;
    out.store = store.template cast<U>();
    out.fusion = fusion;
    out.text = text;
    out.caption = caption;
    return out;
  }
};

// Marks exactly the named tensors trainable. Unknown names are a UsageError.
template <typename T>
void set_trainable(ParamStore<T>& store, const std::vector<std::string>& names);

}  // namespace compfuse
