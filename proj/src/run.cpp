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

#include "compfuse/run.hpp"

#include <cstdio>

#include "compfuse/data.hpp"
#include "compfuse/errors.hpp"

namespace compfuse {

using ojson = nlohmann::ordered_json;

LoadedData load_training_data(RunConfig& cfg) {
  DataPaths paths = DataPaths::in(cfg.data.dir);
  if (!cfg.data.visual.empty()) paths.visual = cfg.data.visual;
  LoadedData d;
  d.bundle = load_data_bundle(paths);
  if (cfg.model.vocab_size == 0) cfg.model.vocab_size = d.bundle.vocab.size();
  if (cfg.model.vocab_size != d.bundle.vocab.size()) {
    throw ConfigError("model.vocab_size " + std::to_string(cfg.model.vocab_size) +
                      " differs from dataset vocabulary of " +
                      std::to_string(d.bundle.vocab.size()));
  }
  if (cfg.model.dims.dim != d.bundle.visual.dim()) {
    throw ConfigError("model.dim " + std::to_string(cfg.model.dims.dim) +
                      " differs from embedding width " + std::to_string(d.bundle.visual.dim()));
  }
  d.training.gallery = build_gallery(d.bundle.visual, d.bundle.gallery_items);
  d.training.train = resolve_triplets(d.bundle, d.training.gallery, "train");
  d.training.eval = resolve_triplets(d.bundle, d.training.gallery, cfg.eval.split);
  return d;
}

EvalOptions eval_options(const EvalSettings& s, FusionMode mode) {
  EvalOptions o;
  o.recall_ks = s.recall_ks;
  o.map_ks = s.map_ks;
  o.mode = mode;
  return o;
}

EvalReport run_evaluation(const EvalRequest& request) {
  if (request.data.dir.empty()) throw ConfigError("eval needs a data directory");
  DataPaths paths = DataPaths::in(request.data.dir);
  if (!request.data.visual.empty()) paths.visual = request.data.visual;
  const DataBundle bundle = load_data_bundle(paths);
  const Gallery gallery = build_gallery(bundle.visual, bundle.gallery_items);
  const std::vector<ResolvedTriplet> queries =
      resolve_triplets(bundle, gallery, request.eval.split);
  if (queries.empty()) throw DataError("no queries in split '" + request.eval.split + "'");

  FusionModel<float> model;
  if (!request.checkpoint.empty()) {
    model = load_checkpoint(request.checkpoint).restore_model();
  } else {
    ModelConfig mc = request.model;
    if (mc.vocab_size == 0) mc.vocab_size = bundle.vocab.size();
    if (request.infer_dim) mc.dims.dim = bundle.visual.dim();
    model = FusionModel<float>::create(mc, request.seed);
  }
  if (model.config.vocab_size != bundle.vocab.size()) {
    throw ConfigError("model vocabulary of " + std::to_string(model.config.vocab_size) +
                      " differs from dataset vocabulary of " +
                      std::to_string(bundle.vocab.size()));
  }
  if (model.config.dims.dim != bundle.visual.dim()) {
    throw ConfigError("model dim " + std::to_string(model.config.dims.dim) +
                      " differs from embedding width " + std::to_string(bundle.visual.dim()));
  }
  return evaluate(model, queries, gallery, eval_options(request.eval, request.mode));
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

TrainOutcome run_training(RunConfig cfg, const TrainOptions& options) {
  cfg.validate();
  LoadedData data = load_training_data(cfg);
  cfg.model.validate();
  const std::uint64_t hash = cfg.hash();
  std::ostream* log = options.log;

  const std::filesystem::path out = cfg.out;
  std::error_code ec;
  std::filesystem::create_directories(out / "checkpoints", ec);
  if (ec) throw DataError("cannot create " + out.string() + ": " + ec.message());
  write_text_file(out / "config.resolved.json", cfg.to_json().dump(2) + "\n");

  TrainOutcome o;
  o.config = cfg;
  o.model = FusionModel<float>::create(cfg.model, cfg.seed);
  if (!options.resume.empty()) {
    Checkpoint ckpt = load_checkpoint(options.resume);
    if (ckpt.config_hash != hash) {
      throw ConfigError("checkpoint " + options.resume + " was written under config hash " +
                        hex64(ckpt.config_hash) + ", current config hashes to " + hex64(hash));
    }
    o.model = ckpt.restore_model();
    o.state = std::move(ckpt.state);
    if (log) {
      *log << "resuming stage " << o.state.stage << " after epoch " << o.state.epochs_completed
           << "\n";
    }
  }

  std::vector<StagePlan> plans;
  if (cfg.stages != "2") {
    plans.push_back(make_stage_plan(1, o.model, cfg.stage1.learning_rate, cfg.stage1.epochs,
                                    cfg.stage1.batch_size, cfg.seed + 1));
  }
  if (cfg.stages != "1") {
    plans.push_back(make_stage_plan(2, o.model, cfg.stage2.learning_rate, cfg.stage2.epochs,
                                    cfg.stage2.batch_size, cfg.seed + 2));
  }
  if (cfg.stages == "2") {
    const bool stage1_done = (o.state.stage == 1 && o.state.epochs_completed >= cfg.stage1.epochs &&
                              !o.state.history.empty()) ||
                             o.state.stage == 2;
    if (!stage1_done) {
      throw ConfigError("stage 2 alone needs --resume from a completed stage-1 checkpoint");
    }
  }

  TrainerConfig tcfg;
  tcfg.loss = cfg.loss;
  tcfg.optimizer = cfg.optimizer;
  tcfg.eval_each_epoch = cfg.eval.every_epoch;

  std::size_t epochs_run = 0;
  TrainHooks hooks;
  hooks.on_epoch_end = [&](const EpochEvent& ev, const TrainState& st) {
    const Checkpoint ckpt = Checkpoint::capture(o.model, st, hash);
    save_checkpoint(ckpt, out / "checkpoints" / "latest.ckpt");
    if (ev.stage == 1 && ev.epoch == cfg.stage1.epochs) {
      save_checkpoint(ckpt, out / "checkpoints" / "stage1.ckpt");
    }
    if (log) {
      *log << "stage " << ev.stage << " epoch " << ev.epoch << " loss " << ev.mean_loss;
      if (ev.recall_at_1) *log << " recall@1 " << *ev.recall_at_1;
      *log << "\n";
    }
    ++epochs_run;
    return !(options.halt_after_epochs && epochs_run >= *options.halt_after_epochs);
  };

  o.result = run_two_stage(plans, data.training, o.model, tcfg, o.state, hooks);
  if (log) {
    for (const auto& w : o.result.warnings) *log << "warning: " << w << "\n";
    for (int s : o.result.skipped) *log << "stage " << s << " skipped\n";
  }

  o.report = ojson::object();
  o.report["config_hash"] = hex64(hash);
  o.report["training"] = o.result.to_json(o.state);
  if (!o.result.halted) {
    save_checkpoint(Checkpoint::capture(o.model, o.state, hash), out / "final.ckpt");
    if (!data.training.eval.empty()) {
      o.eval = evaluate(o.model, data.training.eval, data.training.gallery,
                        eval_options(cfg.eval, FusionMode::kModel));
      write_text_file(out / "eval_report.json", o.eval->to_json_string());
      ojson summary = o.eval->to_json();
      summary.erase("queries");
      o.report["eval"] = std::move(summary);
    }
  }
  write_text_file(out / "train_report.json", o.report.dump(2) + "\n");
  o.config = std::move(cfg);
  return o;
}

}  // namespace compfuse
