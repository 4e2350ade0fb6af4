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

#include "compfuse/config.hpp"

#include <set>
#include <sstream>

#include "compfuse/checkpoint.hpp"
#include "compfuse/data.hpp"
#include "compfuse/errors.hpp"

namespace compfuse {

using ojson = nlohmann::ordered_json;

void RunConfig::validate() const {
  if (data.dir.empty()) throw ConfigError("data.dir is required");
  model.dims.validate();
  if (model.path1_blocks == 0) throw ConfigError("model.path1_blocks must be >= 1");
  if (model.max_len == 0) throw ConfigError("model.max_len must be >= 1");
  loss.validate();
  optimizer.validate();
  for (const auto* s : {&stage1, &stage2}) {
    const std::string name = s == &stage1 ? "stage1" : "stage2";
    if (!(s->learning_rate > 0.0)) throw ConfigError(name + ".learning_rate must be positive");
    if (s->batch_size < 2) throw ConfigError(name + ".batch_size must be >= 2");
  }
  if (stages != "1" && stages != "2" && stages != "both") {
    throw ConfigError("stages must be \"1\", \"2\" or \"both\"");
  }
  if (eval.recall_ks.empty() && eval.map_ks.empty()) throw ConfigError("eval needs K values");
  for (const auto* ks : {&eval.recall_ks, &eval.map_ks}) {
    for (std::size_t k : *ks) {
      if (k == 0) throw ConfigError("eval K values must be positive");
    }
  }
  if (out.empty()) throw ConfigError("out must name a directory");
}

namespace {

ojson stage_json(const StageSettings& s) {
  return {{"learning_rate", s.learning_rate}, {"epochs", s.epochs}, {"batch_size", s.batch_size}};
}

void check_keys(const ojson& j, const std::set<std::string>& keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!keys.contains(key)) {
      throw ConfigError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

StageSettings stage_from_json(const ojson& j, StageSettings s, const std::string& where) {
  check_keys(j, {"learning_rate", "epochs", "batch_size"}, where);
  s.learning_rate = j.value("learning_rate", s.learning_rate);
  s.epochs = j.value("epochs", s.epochs);
  s.batch_size = j.value("batch_size", s.batch_size);
  return s;
}

}  // namespace

ojson RunConfig::to_json() const {
  ojson j;
  j["seed"] = seed;
  j["data"] = {{"dir", data.dir}, {"visual", data.visual}};
  j["model"] = compfuse::to_json(model);
  j["loss"] = {{"temperature", loss.temperature},
               {"hn_alpha", loss.hn_alpha},
               {"hn_beta", loss.hn_beta},
               {"video_weight", loss.video_weight},
               {"caption_weight", loss.caption_weight}};
  j["optimizer"] = {{"beta1", optimizer.beta1},
                    {"beta2", optimizer.beta2},
                    {"eps", optimizer.eps},
                    {"weight_decay", optimizer.weight_decay},
                    {"clip_norm", optimizer.clip_norm}};
  j["stage1"] = stage_json(stage1);
  j["stage2"] = stage_json(stage2);
  j["stages"] = stages;
  j["eval"] = {{"recall_ks", eval.recall_ks},
               {"map_ks", eval.map_ks},
               {"split", eval.split},
               {"every_epoch", eval.every_epoch}};
  j["out"] = out;
  return j;
}

RunConfig RunConfig::from_json(const ojson& j) {
  RunConfig c;
  check_keys(j,
             {"seed", "data", "model", "loss", "optimizer", "stage1", "stage2", "stages", "eval",
              "out"},
             "");
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("data")) {
      const ojson& d = j["data"];
      check_keys(d, {"dir", "visual"}, "data");
      c.data.dir = d.value("dir", c.data.dir);
      c.data.visual = d.value("visual", c.data.visual);
    }
    if (j.contains("model")) c.model = model_config_from_json(j["model"]);
    if (j.contains("loss")) {
      const ojson& l = j["loss"];
      check_keys(l, {"temperature", "hn_alpha", "hn_beta", "video_weight", "caption_weight"},
                 "loss");
      c.loss.temperature = l.value("temperature", c.loss.temperature);
      c.loss.hn_alpha = l.value("hn_alpha", c.loss.hn_alpha);
      c.loss.hn_beta = l.value("hn_beta", c.loss.hn_beta);
      c.loss.video_weight = l.value("video_weight", c.loss.video_weight);
      c.loss.caption_weight = l.value("caption_weight", c.loss.caption_weight);
    }
    if (j.contains("optimizer")) {
      const ojson& o = j["optimizer"];
      check_keys(o, {"beta1", "beta2", "eps", "weight_decay", "clip_norm"}, "optimizer");
      c.optimizer.beta1 = o.value("beta1", c.optimizer.beta1);
      c.optimizer.beta2 = o.value("beta2", c.optimizer.beta2);
      c.optimizer.eps = o.value("eps", c.optimizer.eps);
      c.optimizer.weight_decay = o.value("weight_decay", c.optimizer.weight_decay);
      c.optimizer.clip_norm = o.value("clip_norm", c.optimizer.clip_norm);
    }
    if (j.contains("stage1")) c.stage1 = stage_from_json(j["stage1"], c.stage1, "stage1");
    if (j.contains("stage2")) c.stage2 = stage_from_json(j["stage2"], c.stage2, "stage2");
    c.stages = j.value("stages", c.stages);
    if (j.contains("eval")) {
      const ojson& e = j["eval"];
      check_keys(e, {"recall_ks", "map_ks", "split", "every_epoch"}, "eval");
      c.eval.recall_ks = e.value("recall_ks", c.eval.recall_ks);
      c.eval.map_ks = e.value("map_ks", c.eval.map_ks);
      c.eval.split = e.value("split", c.eval.split);
      c.eval.every_epoch = e.value("every_epoch", c.eval.every_epoch);
    }
    c.out = j.value("out", c.out);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.filename().string() + ": " + e.what());
  }
  return from_json(j);
}

std::uint64_t RunConfig::hash() const {
  ojson j = to_json();
  j.erase("out");
  j.erase("stages");
  return fnv1a64(j.dump());
}

std::vector<std::size_t> parse_k_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      throw ConfigError("bad K value '" + item + "'");
    }
    if (pos != item.size() || v == 0) throw ConfigError("bad K value '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ConfigError("empty K list");
  return out;
}

}  // namespace compfuse
