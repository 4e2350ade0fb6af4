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

#include "compfuse/model.hpp"

#include <set>

#include "compfuse/errors.hpp"

namespace compfuse {

void ModelConfig::validate() const {
  dims.validate();
  if (path1_blocks == 0) throw ConfigError("model.path1_blocks must be >= 1");
  if (vocab_size < 2) throw ConfigError("model.vocab_size must be >= 2");
  if (max_len < 1) throw ConfigError("model.max_len must be >= 1");
}

nlohmann::ordered_json to_json(const ModelConfig& cfg) {
  return {{"dim", cfg.dims.dim},
          {"heads", cfg.dims.heads},
          {"ffn_mult", cfg.dims.ffn_mult},
          {"ln_eps", cfg.dims.ln_eps},
          {"init_std", cfg.dims.init_std},
          {"path1_blocks", cfg.path1_blocks},
          {"vocab_size", cfg.vocab_size},
          {"max_len", cfg.max_len},
          {"use_caption", cfg.use_caption}};
}

ModelConfig model_config_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw ConfigError("model config must be an object");
  static const std::set<std::string> kKeys{"dim",         "heads",      "ffn_mult",
                                           "ln_eps",      "init_std",   "path1_blocks",
                                           "vocab_size",  "max_len",    "use_caption"};
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.contains(key)) throw ConfigError("unknown key 'model." + key + "'");
  }
  ModelConfig cfg;
  try {
    cfg.dims.dim = j.value("dim", cfg.dims.dim);
    cfg.dims.heads = j.value("heads", cfg.dims.heads);
    cfg.dims.ffn_mult = j.value("ffn_mult", cfg.dims.ffn_mult);
    cfg.dims.ln_eps = j.value("ln_eps", cfg.dims.ln_eps);
    cfg.dims.init_std = j.value("init_std", cfg.dims.init_std);
    cfg.path1_blocks = j.value("path1_blocks", cfg.path1_blocks);
    cfg.vocab_size = j.value("vocab_size", cfg.vocab_size);
    cfg.max_len = j.value("max_len", cfg.max_len);
    cfg.use_caption = j.value("use_caption", cfg.use_caption);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  return cfg;
}

template <typename T>
FusionModel<T> FusionModel<T>::create(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  FusionModel<T> m;
  m.config = config;
  Rng rng(seed);
  m.fusion = make_fusion(m.store, config.dims, config.path1_blocks, rng);
  m.text = make_text_encoder(m.store, kTextPrefix, config.dims, config.vocab_size,
                             config.max_len, rng);
  for (const auto& name : m.text_names()) m.store.at(name).trainable = false;
  m.caption = clone_text_encoder(m.store, m.text, kTextPrefix, kCaptionPrefix, false);
  return m;
}

template <typename T>
void set_trainable(ParamStore<T>& store, const std::vector<std::string>& names) {
  std::set<std::string> wanted(names.begin(), names.end());
  for (const auto& n : wanted) {
    if (!store.contains(n)) throw UsageError("unknown parameter '" + n + "'");
  }
  for (auto& p : store) p.trainable = wanted.contains(p.name);
}

template struct FusionModel<float>;
template struct FusionModel<double>;
template void set_trainable(ParamStore<float>&, const std::vector<std::string>&);
template void set_trainable(ParamStore<double>&, const std::vector<std::string>&);

}  // namespace compfuse
