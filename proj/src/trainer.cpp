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

#include "compfuse/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>
#include <set>

#include "compfuse/errors.hpp"

namespace compfuse {

using ojson = nlohmann::ordered_json;

void OptimizerConfig::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("optimizer.beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("optimizer.beta2 must be in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("optimizer.eps must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("optimizer.weight_decay must be >= 0");
  if (!std::isfinite(clip_norm)) throw ConfigError("optimizer.clip_norm must be finite");
}

void StagePlan::validate() const {
  if (stage_id != 1 && stage_id != 2) throw ConfigError("stage id must be 1 or 2");
  const std::string s = "stage" + std::to_string(stage_id);
  if (!(learning_rate > 0.0)) throw ConfigError(s + ".learning_rate must be positive");
  if (batch_size < 2) throw ConfigError(s + ".batch_size must be >= 2");
}

template <typename T>
StagePlan make_stage_plan(int stage_id, const FusionModel<T>& model, double learning_rate,
                          std::size_t epochs, std::size_t batch_size, std::uint64_t seed) {
  StagePlan p;
  p.stage_id = stage_id;
  p.trainable_param_names = model.fusion_names();
  if (stage_id == 2) {
    for (const auto& n : model.text_names()) p.trainable_param_names.push_back(n);
  }
  p.learning_rate = learning_rate;
  p.epochs = epochs;
  p.batch_size = batch_size;
  p.seed = seed;
  p.validate();
  return p;
}

template <typename T>
void OptimizerState<T>::reset(const ParamStore<T>& store) {
  step = 0;
  m.assign(store.size(), Matrix<T>());
  v.assign(store.size(), Matrix<T>());
}

template <typename T>
void adamw_step(ParamStore<T>& store, const StagePlan& plan, const OptimizerConfig& cfg,
                OptimizerState<T>& state) {
  if (state.m.size() != store.size()) state.reset(store);
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2_sqrt = std::sqrt(1.0 - std::pow(cfg.beta2, t));
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T decay = static_cast<T>(1.0 - plan.learning_rate * cfg.weight_decay);
  const T step_size = static_cast<T>(plan.learning_rate / bc1);
  const T eps = static_cast<T>(cfg.eps);
  const T inv_bc2_sqrt = static_cast<T>(1.0 / bc2_sqrt);

  for (const std::string& name : plan.trainable_param_names) {
    const std::size_t id = store.id_of(name);
    ParamTensor<T>& p = store[id];
    if (!p.has_grad) {
      throw InternalError("adamw_step: trainable tensor '" + name + "' has no gradient");
    }
    Matrix<T>& m = state.m[id];
    Matrix<T>& v = state.v[id];
    if (m.size() != p.value.size()) {
      m = Matrix<T>(p.value.rows(), p.value.cols());
      v = Matrix<T>(p.value.rows(), p.value.cols());
    }
    auto w = p.value.data();
    auto g = p.grad.data();
    auto md = m.data();
    auto vd = v.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      md[i] = b1 * md[i] + (T{1} - b1) * g[i];
      vd[i] = b2 * vd[i] + (T{1} - b2) * g[i] * g[i];
      w[i] *= decay;
      const T denom = std::sqrt(vd[i]) * inv_bc2_sqrt + eps;
      w[i] -= step_size * md[i] / denom;
    }
  }
}

template <typename T>
double clip_grad_norm(ParamStore<T>& store, const std::vector<std::string>& names,
                      double max_norm) {
  double ss = 0.0;
  for (const auto& n : names) {
    for (T g : store.at(n).grad.data()) ss += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(ss);
  if (max_norm > 0.0 && norm > max_norm) {
    const T coef = static_cast<T>(max_norm / (norm + 1e-6));
    for (const auto& n : names) {
      for (T& g : store.at(n).grad.data()) g *= coef;
    }
  }
  return norm;
}

namespace {

struct Snapshot {
  std::vector<std::pair<std::size_t, std::vector<float>>> values;
};

Snapshot snapshot_except(const ParamStore<float>& store, const std::set<std::string>& skip) {
  Snapshot s;
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (skip.contains(store[i].name)) continue;
    auto d = store[i].value.data();
    s.values.emplace_back(i, std::vector<float>(d.begin(), d.end()));
  }
  return s;
}

FreezeAudit audit(const ParamStore<float>& store, const Snapshot& before) {
  FreezeAudit a;
  for (const auto& [id, vals] : before.values) {
    ++a.tensors_checked;
    auto now = store[id].value.data();
    if (now.size() != vals.size() ||
        std::memcmp(now.data(), vals.data(), vals.size() * sizeof(float)) != 0) {
      a.changed.push_back(store[id].name);
    }
  }
  return a;
}

// Frozen-path encodings reused across batches.
class EncodingCache {
 public:
  EncodingCache(FusionModel<float>& model, const TrainingData& data, bool text_frozen)
      : model_(model) {
    for (const ResolvedTriplet& t : data.train) {
      caption_seq(t.q_c);
      caption_cls(t.target_caption);
    }
    if (text_frozen) {
      text_.reserve(data.train.size());
      for (const ResolvedTriplet& t : data.train) {
        text_.push_back(surrogate_encode_text_apply(model.store, model.text, t.q_t));
      }
    }
  }

  bool has_text() const { return !text_.empty(); }
  const TokenSequence<float>& text(std::size_t i) const { return text_[i]; }

  const TokenSequence<float>& caption_seq(const TokenIds& ids) {
    auto it = captions_.find(ids);
    if (it == captions_.end()) {
      it = captions_.emplace(ids, surrogate_encode_text_apply(model_.store, model_.caption, ids))
               .first;
    }
    return it->second;
  }

  const std::vector<float>& caption_cls(const TokenIds& ids) {
    auto it = pooled_.find(ids);
    if (it == pooled_.end()) it = pooled_.emplace(ids, encode_caption_pooled(model_, ids)).first;
    return it->second;
  }

 private:
  FusionModel<float>& model_;
  std::vector<TokenSequence<float>> text_;
  std::map<TokenIds, TokenSequence<float>> captions_;
  std::map<TokenIds, std::vector<float>> pooled_;
};

double train_batch(std::span<const std::size_t> batch, const TrainingData& data,
                   FusionModel<float>& model, EncodingCache& cache, const StagePlan& plan,
                   const TrainerConfig& cfg, OptimizerState<float>& opt) {
  const std::size_t d = model.config.dims.dim;
  Tape<float> tape;
  std::vector<Var<float>> rows;
  rows.reserve(batch.size());
  MatrixF yv(batch.size(), d);
  MatrixF yc(batch.size(), d);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const ResolvedTriplet& t = data.train[batch[b]];
    SeqVar<float> text = cache.has_text()
                             ? to_tape(tape, cache.text(batch[b]))
                             : surrogate_encode_text(tape, model.store, model.text, t.q_t);
    SeqVar<float> cap = to_tape(tape, cache.caption_seq(t.q_c));
    SeqVar<float> vis = to_tape(tape, t.q_v);
    rows.push_back(
        fuse(text, vis, cap, model.store, model.fusion, model.config.use_caption).emb_mm);
    auto g = data.gallery.row(t.target);
    std::copy(g.begin(), g.end(), yv.row(b).begin());
    const auto& c = cache.caption_cls(t.target_caption);
    std::copy(c.begin(), c.end(), yc.row(b).begin());
  }
  Var<float> queries = ops::concat_rows<float>(rows);
  Var<float> loss =
      dual_target_loss(queries, tape.constant(std::move(yv)), tape.constant(std::move(yc)), cfg.loss);
  model.store.zero_grad();
  tape.backward(loss);
  clip_grad_norm(model.store, plan.trainable_param_names, cfg.optimizer.clip_norm);
  adamw_step(model.store, plan, cfg.optimizer, opt);
  return static_cast<double>(loss.value()(0, 0));
}

double recall1(FusionModel<float>& model, const TrainingData& data) {
  EvalOptions o;
  o.recall_ks = {1};
  o.map_ks = {};
  o.keep_queries = false;
  return evaluate(model, data.eval, data.gallery, o).recall_at.at(1);
}

ojson stage_entry(const StagePlan& plan) {
  ojson e;
  e["stage"] = plan.stage_id;
  e["learning_rate"] = plan.learning_rate;
  e["epochs"] = plan.epochs;
  e["batch_size"] = plan.batch_size;
  e["trainable_tensors"] = plan.trainable_param_names.size();
  e["epoch_loss"] = ojson::array();
  e["epoch_recall@1"] = ojson::array();
  return e;
}

}  // namespace

StageReport run_stage(const StagePlan& plan, const TrainingData& data, FusionModel<float>& model,
                      const TrainerConfig& cfg, TrainState& state, const TrainHooks& hooks) {
  plan.validate();
  cfg.loss.validate();
  cfg.optimizer.validate();
  if (data.train.size() < 2) throw DataError("training needs at least two triplets");
  set_trainable(model.store, plan.trainable_param_names);

  if (state.epochs_completed == 0 || state.stage != plan.stage_id) {
    state.stage = plan.stage_id;
    state.epochs_completed = 0;
    state.optimizer.reset(model.store);
    state.rng = Rng(plan.seed);
    state.history.push_back(stage_entry(plan));
  } else if (state.history.empty() || state.history.back()["stage"] != plan.stage_id) {
    throw DataError("resume state has no history for stage " + std::to_string(plan.stage_id));
  }
  if (state.optimizer.m.size() != model.store.size()) state.optimizer.reset(model.store);

  const std::set<std::string> plan_names(plan.trainable_param_names.begin(),
                                         plan.trainable_param_names.end());
  const Snapshot frozen = snapshot_except(model.store, plan_names);
  const bool text_frozen = !plan_names.contains(model.text_names().front());

  StageReport report;
  report.stage = plan.stage_id;
  auto record_audit = [&] {
    report.audit = audit(model.store, frozen);
    state.history.back()["frozen_audit"] = {{"tensors_checked", report.audit.tensors_checked},
                                            {"changed", report.audit.changed}};
  };
  if (state.epochs_completed < plan.epochs) {
    EncodingCache cache(model, data, text_frozen);
    std::vector<std::size_t> order(data.train.size());
    while (state.epochs_completed < plan.epochs) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      shuffle(order, state.rng);
      double total = 0.0;
      std::size_t batches = 0;
      for (std::size_t start = 0; start < order.size(); start += plan.batch_size) {
        const std::size_t n = std::min(plan.batch_size, order.size() - start);
        if (n < 2) break;
        total += train_batch(std::span(order).subspan(start, n), data, model, cache, plan, cfg,
                             state.optimizer);
        ++batches;
      }
      state.epochs_completed += 1;
      EpochEvent ev;
      ev.stage = plan.stage_id;
      ev.epoch = state.epochs_completed;
      ev.mean_loss = total / static_cast<double>(batches);
      ojson& entry = state.history.back();
      entry["epoch_loss"].push_back(ev.mean_loss);
      if (cfg.eval_each_epoch && !data.eval.empty()) {
        ev.recall_at_1 = recall1(model, data);
        entry["epoch_recall@1"].push_back(*ev.recall_at_1);
      }
      if (state.epochs_completed == plan.epochs) record_audit();
      if (hooks.on_epoch_end && !hooks.on_epoch_end(ev, state)) {
        report.halted = true;
        break;
      }
    }
  }
  record_audit();
  const ojson& entry = state.history.back();
  report.epoch_loss = entry["epoch_loss"].get<std::vector<double>>();
  report.epoch_recall_at_1 = entry["epoch_recall@1"].get<std::vector<double>>();
  if (!report.audit.passed()) {
    throw InternalError("freezing contract violated in stage " + std::to_string(plan.stage_id) +
                        ": '" + report.audit.changed.front() + "' changed");
  }
  return report;
}

TwoStageResult run_two_stage(const std::vector<StagePlan>& plans, const TrainingData& data,
                             FusionModel<float>& model, const TrainerConfig& cfg,
                             TrainState& state, const TrainHooks& hooks) {
  TwoStageResult result;
  const StagePlan* s1 = nullptr;
  const StagePlan* s2 = nullptr;
  for (const StagePlan& p : plans) (p.stage_id == 1 ? s1 : s2) = &p;
  if (s1 == nullptr) result.skipped.push_back(1);
  if (s2 == nullptr) result.skipped.push_back(2);
  if (s1 && s2 && s2->learning_rate >= s1->learning_rate) {
    result.warnings.push_back("stage-2 learning rate " + std::to_string(s2->learning_rate) +
                              " is not below stage-1 learning rate " +
                              std::to_string(s1->learning_rate));
  }
  const auto caption_names = model.caption_names();
  std::set<std::string> not_caption;
  for (const auto& p : model.store) not_caption.insert(p.name);
  for (const auto& n : caption_names) not_caption.erase(n);
  const Snapshot caption_before = snapshot_except(model.store, not_caption);

  for (const StagePlan& plan : plans) {
    if (plan.stage_id < state.stage) continue;
    StageReport r = run_stage(plan, data, model, cfg, state, hooks);
    const bool halted = r.halted;
    result.stages.push_back(std::move(r));
    if (halted) {
      result.halted = true;
      break;
    }
  }
  result.caption_audit = audit(model.store, caption_before);
  if (!result.caption_audit.passed()) {
    throw InternalError("caption encoder changed during training");
  }
  return result;
}

ojson TwoStageResult::to_json(const TrainState& state) const {
  ojson j;
  j["stages"] = state.history;
  j["skipped_stages"] = skipped;
  j["caption_frozen_audit"] = {{"tensors_checked", caption_audit.tensors_checked},
                               {"changed", caption_audit.changed}};
  j["halted"] = halted;
  j["warnings"] = warnings;
  return j;
}

template StagePlan make_stage_plan(int, const FusionModel<float>&, double, std::size_t,
                                   std::size_t, std::uint64_t);
template StagePlan make_stage_plan(int, const FusionModel<double>&, double, std::size_t,
                                   std::size_t, std::uint64_t);
template struct OptimizerState<float>;
template struct OptimizerState<double>;
template void adamw_step(ParamStore<float>&, const StagePlan&, const OptimizerConfig&,
                         OptimizerState<float>&);
template void adamw_step(ParamStore<double>&, const StagePlan&, const OptimizerConfig&,
                         OptimizerState<double>&);
template double clip_grad_norm(ParamStore<float>&, const std::vector<std::string>&, double);
template double clip_grad_norm(ParamStore<double>&, const std::vector<std::string>&, double);

}  // namespace compfuse
