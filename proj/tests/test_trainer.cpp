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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "compfuse/checkpoint.hpp"
#include "compfuse/config.hpp"
#include "compfuse/data.hpp"
#include "compfuse/datagen.hpp"
#include "compfuse/errors.hpp"
#include "compfuse/run.hpp"
#include "compfuse/trainer.hpp"

namespace compfuse {
namespace {

namespace fs = std::filesystem;

TEST(AdamW, MatchesScalarRecurrence) {
  ParamStore<double> store;
  store.add("w", MatrixD::from_rows({{0.5, -1.0, 2.0}}));
  store.add("frozen", MatrixD::from_rows({{3.0}}), false);
  StagePlan plan;
  plan.learning_rate = 0.01;
  plan.trainable_param_names = {"w"};
  OptimizerConfig cfg;
  OptimizerState<double> state;
  std::vector<double> w{0.5, -1.0, 2.0}, m(3, 0.0), v(3, 0.0);
  const std::vector<std::vector<double>> grads{{0.1, -0.2, 0.3}, {1.0, 0.0, -4.0}, {-0.5, 0.5, 0.5}};
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    store.zero_grad();
    auto& p = store.at("w");
    for (std::size_t i = 0; i < 3; ++i) p.grad(0, i) = grads[t - 1][i];
    p.has_grad = true;
    adamw_step(store, plan, cfg, state);
    for (std::size_t i = 0; i < 3; ++i) {
      const double g = grads[t - 1][i];
      m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g * g;
      const double mhat = m[i] / (1 - std::pow(cfg.beta1, t));
      const double vhat = v[i] / (1 - std::pow(cfg.beta2, t));
      w[i] -= plan.learning_rate * cfg.weight_decay * w[i];
      w[i] -= plan.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
      EXPECT_NEAR(p.value(0, i), w[i], 1e-12) << "step " << t << " elem " << i;
    }
  }
  EXPECT_EQ(state.step, 3u);
  EXPECT_EQ(store.at("frozen").value(0, 0), 3.0);
}

TEST(AdamW, MissingGradientIsAnInternalError) {
  ParamStore<float> store;
  store.add("w", MatrixF(1, 2, 1.0f));
  StagePlan plan;
  plan.trainable_param_names = {"w"};
  OptimizerState<float> state;
  EXPECT_THROW(adamw_step(store, plan, OptimizerConfig{}, state), InternalError);
}

TEST(ClipGradNorm, ScalesToMaxNorm) {
  ParamStore<double> store;
  store.add("a", MatrixD::from_rows({{3.0}}));
  store.add("b", MatrixD::from_rows({{4.0}}));
  store.at("a").grad(0, 0) = 3.0;
  store.at("b").grad(0, 0) = 4.0;
  EXPECT_DOUBLE_EQ(clip_grad_norm(store, {"a", "b"}, 1.0), 5.0);
  EXPECT_NEAR(store.at("a").grad(0, 0), 3.0 / (5.0 + 1e-6), 1e-15);
  EXPECT_NEAR(store.at("b").grad(0, 0), 4.0 / (5.0 + 1e-6), 1e-15);
  store.at("a").grad(0, 0) = 0.3;
  store.at("b").grad(0, 0) = 0.4;
  clip_grad_norm(store, {"a", "b"}, 1.0);
  EXPECT_EQ(store.at("a").grad(0, 0), 0.3);
}

class SmallRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "compfuse_trainer";
    fs::remove_all(root_);
    SynthSpec spec;
    spec.attributes = 3;
    spec.values = 4;
    spec.dim = 16;
    spec.gallery_size = 40;
    spec.triplets = 96;
    spec.seed = 2;
    write_dataset(generate(spec), root_ / "data", false);
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static RunConfig config(const std::string& out) {
    RunConfig cfg;
    cfg.seed = 4;
    cfg.data.dir = (root_ / "data").string();
    cfg.model.dims.dim = 16;
    cfg.model.dims.heads = 2;
    cfg.model.path1_blocks = 1;
    cfg.stage1 = {1e-3, 2, 16};
    cfg.stage2 = {1e-4, 2, 16};
    cfg.eval.recall_ks = {1, 5};
    cfg.eval.map_ks = {5};
    cfg.out = (root_ / out).string();
    return cfg;
  }

  static std::string bytes(const fs::path& p) { return read_text_file(p); }

  static fs::path root_;
};

fs::path SmallRun::root_;

std::map<std::string, MatrixF> snapshot(const ParamStore<float>& store) {
  std::map<std::string, MatrixF> out;
  for (const auto& p : store) out[p.name] = p.value;
  return out;
}

TEST_F(SmallRun, StagesTouchOnlyTheirTrainableTensors) {
  RunConfig cfg = config("freeze");
  LoadedData data = load_training_data(cfg);
  auto model = FusionModel<float>::create(cfg.model, cfg.seed);
  TrainerConfig tcfg;
  TrainState state;
  const auto fusion = model.fusion_names();
  const auto text = model.text_names();
  auto in = [](const std::vector<std::string>& names, const std::string& n) {
    return std::find(names.begin(), names.end(), n) != names.end();
  };

  const auto before1 = snapshot(model.store);
  const auto plan1 = make_stage_plan(1, model, 1e-3, 2, 16, 1);
  const auto r1 = run_stage(plan1, data.training, model, tcfg, state);
  EXPECT_TRUE(r1.audit.passed());
  EXPECT_EQ(r1.epoch_loss.size(), 2u);
  for (const auto& p : model.store) {
    if (in(fusion, p.name)) {
      EXPECT_NE(p.value, before1.at(p.name)) << p.name;
    } else {
      EXPECT_EQ(p.value, before1.at(p.name)) << p.name;
    }
  }

  const auto before2 = snapshot(model.store);
  const auto plan2 = make_stage_plan(2, model, 1e-4, 1, 16, 2);
  const auto r2 = run_stage(plan2, data.training, model, tcfg, state);
  EXPECT_TRUE(r2.audit.passed());
  std::size_t text_changed = 0;
  for (const auto& p : model.store) {
    if (in(fusion, p.name) || in(text, p.name)) {
      text_changed += p.value != before2.at(p.name);
    } else {
      EXPECT_EQ(p.value, before2.at(p.name)) << p.name;
    }
  }
  EXPECT_GT(text_changed, fusion.size());
  for (const auto& n : model.caption_names()) EXPECT_EQ(model.store.at(n).value, before1.at(n));
}

TEST_F(SmallRun, ZeroEpochsLeavesModelUnchanged) {
  RunConfig cfg = config("zero");
  LoadedData data = load_training_data(cfg);
  auto model = FusionModel<float>::create(cfg.model, cfg.seed);
  const auto before = snapshot(model.store);
  TrainState state;
  const auto r = run_stage(make_stage_plan(1, model, 1e-3, 0, 16, 1), data.training, model,
                           TrainerConfig{}, state);
  EXPECT_TRUE(r.epoch_loss.empty());
  EXPECT_EQ(snapshot(model.store), before);
}

TEST_F(SmallRun, CheckpointRoundTripIsByteIdentical) {
  RunConfig cfg = config("ckpt");
  cfg.stage1.epochs = 1;
  cfg.stages = "1";
  const auto o = run_training(cfg);
  const std::string raw = bytes(fs::path(cfg.out) / "final.ckpt");
  const Checkpoint ck = Checkpoint::parse(raw);
  EXPECT_EQ(ck.serialize(), raw);
  EXPECT_EQ(ck.config_hash, o.config.hash());
  const auto restored = ck.restore_model();
  EXPECT_EQ(snapshot(restored.store), snapshot(o.model.store));
  std::string bad = raw;
  bad[0] = 'X';
  EXPECT_THROW(Checkpoint::parse(bad), DataError);
  EXPECT_THROW(Checkpoint::parse(raw.substr(0, raw.size() / 2)), DataError);
}

TEST_F(SmallRun, IdenticalConfigsGiveIdenticalArtifacts) {
  run_training(config("det_a"));
  run_training(config("det_b"));
  for (const char* f : {"final.ckpt", "checkpoints/stage1.ckpt", "eval_report.json"}) {
    EXPECT_EQ(bytes(root_ / "det_a" / f), bytes(root_ / "det_b" / f)) << f;
  }
  // Reports differ only through the output path, which is not recorded.
  EXPECT_EQ(bytes(root_ / "det_a" / "train_report.json"),
            bytes(root_ / "det_b" / "train_report.json"));
}

TEST_F(SmallRun, HaltedThenResumedRunMatchesUninterrupted) {
  run_training(config("full"));
  RunConfig cfg = config("halted");
  TrainOptions halt;
  halt.halt_after_epochs = 3;
  const auto h = run_training(cfg, halt);
  EXPECT_TRUE(h.result.halted);
  EXPECT_FALSE(fs::exists(fs::path(cfg.out) / "final.ckpt"));
  TrainOptions resume;
  resume.resume = (fs::path(cfg.out) / "checkpoints" / "latest.ckpt").string();
  const auto r = run_training(cfg, resume);
  EXPECT_FALSE(r.result.halted);
  EXPECT_EQ(bytes(root_ / "full" / "final.ckpt"), bytes(root_ / "halted" / "final.ckpt"));
  EXPECT_EQ(bytes(root_ / "full" / "train_report.json"),
            bytes(root_ / "halted" / "train_report.json"));
}

TEST_F(SmallRun, ResumeUnderDifferentConfigIsRejected) {
  RunConfig cfg = config("hash");
  cfg.stages = "1";
  cfg.stage1.epochs = 1;
  run_training(cfg);
  RunConfig other = cfg;
  other.stage2.learning_rate = 5e-5;
  TrainOptions resume;
  resume.resume = (fs::path(cfg.out) / "final.ckpt").string();
  EXPECT_THROW(run_training(other, resume), ConfigError);
  RunConfig stage2 = cfg;
  stage2.stages = "2";
  EXPECT_NO_THROW(run_training(stage2, resume));
  stage2.out = (root_ / "hash2").string();
  EXPECT_THROW(run_training(stage2), ConfigError);
}

TEST_F(SmallRun, WarnsWhenStageTwoRateIsNotLower) {
  RunConfig cfg = config("warn");
  cfg.stage1.epochs = 1;
  cfg.stage2 = {2e-3, 1, 16};
  const auto o = run_training(cfg);
  ASSERT_EQ(o.result.warnings.size(), 1u);
  EXPECT_NE(o.result.warnings[0].find("learning rate"), std::string::npos);
  EXPECT_TRUE(o.result.caption_audit.passed());
  EXPECT_GT(o.result.caption_audit.tensors_checked, 0u);
}

TEST(RunConfig, StrictJsonAndHash) {
  RunConfig cfg;
  cfg.data.dir = "d";
  auto j = cfg.to_json();
  EXPECT_EQ(RunConfig::from_json(j).to_json(), j);
  j["optimizer"]["bogus"] = 1;
  try {
    RunConfig::from_json(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("optimizer.bogus"), std::string::npos);
  }
  RunConfig moved = cfg;
  moved.out = "elsewhere";
  moved.stages = "1";
  EXPECT_EQ(moved.hash(), cfg.hash());
  moved.seed = 1;
  EXPECT_NE(moved.hash(), cfg.hash());
  EXPECT_EQ(parse_k_list("1,5,10"), (std::vector<std::size_t>{1, 5, 10}));
  EXPECT_THROW(parse_k_list("1,x"), Error);
  EXPECT_THROW(parse_k_list("0"), Error);
}

}  // namespace
}  // namespace compfuse
