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

// Acceptance runner: one PASS/FAIL line per criterion, tolerances pinned
// below. Exits nonzero when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "compfuse/checkpoint.hpp"
#include "compfuse/cli.hpp"
#include "compfuse/config.hpp"
#include "compfuse/contrastive.hpp"
#include "compfuse/datagen.hpp"
#include "compfuse/fusion.hpp"
#include "compfuse/gradient_suite.hpp"
#include "compfuse/retrieval.hpp"
#include "compfuse/run.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace compfuse;

namespace {

constexpr double kGradTol = 1e-4;
constexpr double kGradSeconds = 120.0;
constexpr double kPermTol = 1e-6;
constexpr double kMeanTol = 1e-7;
constexpr double kMaskTol = 1e-7;
constexpr double kInfoNceTol = 1e-7;
constexpr double kDualTol = 1e-9;
constexpr double kRowScaleTol = 1e-6;
constexpr double kStage1Floor = 0.90;
constexpr double kBaselineCeiling = 0.50;
constexpr double kLearnSeconds = 600.0;
constexpr double kAblationMargin = 0.02;
const std::vector<std::uint64_t> kSeeds{0, 1, 2};

int failures = 0;

void verdict(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%d] %-22s %s  %s\n", id, name.c_str(), ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void info(const std::string& line) {
  std::printf("    %s\n", line.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::string bytes(const fs::path& p) { return read_text_file(p); }

// ---------------------------------------------------------------- 1
void gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  const GradCheckReport r = run_gradient_suite(GradientSuiteOptions{});
  const double secs = seconds_since(t0);
  double worst = 0.0;
  std::string worst_name;
  for (const auto& row : r.rows) {
    if (row.relative_error >= worst) {
      worst = row.relative_error;
      worst_name = row.name;
    }
  }
  verdict(1, "gradient-suite", r.passed() && worst < kGradTol && secs < kGradSeconds,
          std::to_string(r.rows.size()) + " tensors, max rel err " + fmt("%.2e", worst) + " (" +
              worst_name + ") < 1e-4, " + fmt("%.1f", secs) + " s < 120 s");
}

// ---------------------------------------------------------------- 2
TokenSequence<double> rseq(std::size_t len, std::size_t dim, Rng& rng) {
  return {testutil::random_matrix<double>(len, dim, rng), testutil::random_mask(len, rng)};
}

TokenSequence<double> permute(const TokenSequence<double>& s, const std::vector<std::size_t>& p) {
  TokenSequence<double> out{MatrixD(s.length(), s.dim()), TokenMask(s.length())};
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::copy(s.tokens.row(p[i]).begin(), s.tokens.row(p[i]).end(), out.tokens.row(i).begin());
    out.mask[i] = s.mask[p[i]];
  }
  return out;
}

std::vector<std::size_t> rperm(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  shuffle(p, rng);
  return p;
}

double max_diff(const MatrixD& a, const MatrixD& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

void structural() {
  BlockDims dims;
  dims.dim = 8;
  dims.heads = 2;
  dims.init_std = 0.3;
  Rng rng(2024);
  double kv_worst = 0.0, q_worst = 0.0, mean_worst = 0.0, mask_worst = 0.0;
  for (int c = 0; c < 200; ++c) {
    ParamStore<double> store;
    Rng init(static_cast<std::uint64_t>(c));
    const auto p = make_ca_block(store, "b", dims, init);
    const auto q = rseq(1 + rng.uniform_index(6), 8, rng);
    const auto kv = rseq(1 + rng.uniform_index(7), 8, rng);
    const auto base = ca_block_apply(q, kv, store, p);
    kv_worst = std::max(kv_worst, max_diff(base.tokens,
        ca_block_apply(q, permute(kv, rperm(kv.length(), rng)), store, p).tokens));
    const auto perm = rperm(q.length(), rng);
    q_worst = std::max(q_worst, max_diff(permute(base, perm).tokens,
                                         ca_block_apply(permute(q, perm), kv, store, p).tokens));
    // Masked key rows replaced by large noise.
    auto kv2 = kv;
    for (std::size_t r = 0; r < kv2.length(); ++r) {
      if (!kv2.mask[r]) {
        for (double& v : kv2.tokens.row(r)) v = 100.0 * rng.normal();
      }
    }
    mask_worst = std::max(mask_worst, max_diff(base.tokens, ca_block_apply(q, kv2, store, p).tokens));
  }
  for (int c = 0; c < 50; ++c) {
    ParamStore<double> store;
    Rng init(static_cast<std::uint64_t>(c) + 500);
    const auto fp = make_fusion(store, dims, 2, init);
    const auto out = fuse_apply(rseq(4, 8, rng), rseq(3, 8, rng), rseq(5, 8, rng), store, fp);
    for (std::size_t j = 0; j < 8; ++j) {
      mean_worst = std::max(mean_worst,
                            std::abs(out.emb_mm[j] - 0.5 * (out.emb_tv[j] + out.emb_tv_prime[j])));
    }
  }
  const bool ok = kv_worst < kPermTol && q_worst < kPermTol && mean_worst < kMeanTol &&
                  mask_worst < kMaskTol;
  verdict(2, "structural-invariants", ok,
          "200 cases: kv-perm " + fmt("%.1e", kv_worst) + ", q-perm " + fmt("%.1e", q_worst) +
              " (< 1e-6); emb_mm mean " + fmt("%.1e", mean_worst) + ", masked " +
              fmt("%.1e", mask_worst) + " (< 1e-7)");
}

// ---------------------------------------------------------------- 3
void loss_oracle() {
  Rng rng(77);
  LossConfig plain;
  plain.hn_alpha = 1.0;
  plain.hn_beta = 0.0;
  double info_worst = 0.0;
  for (int c = 0; c < 50; ++c) {
    const std::size_t b = 2 + rng.uniform_index(31);
    const std::size_t d = 2 + rng.uniform_index(31);
    const auto q = testutil::random_matrix<double>(b, d, rng);
    const auto t = testutil::random_matrix<double>(b, d, rng);
    info_worst = std::max(info_worst, std::abs(hn_nce_loss_value(q, t, plain) -
                                               oracle::infonce(q, t, plain.temperature)));
  }
  LossConfig cfg;
  double dual_worst = 0.0, scale_worst = 0.0;
  for (int c = 0; c < 50; ++c) {
    BatchEmbeddings<double> batch{testutil::random_matrix<double>(16, 8, rng),
                                  testutil::random_matrix<double>(16, 8, rng), {}};
    batch.caption_targets = batch.video_targets;
    const double single = hn_nce_loss_value(batch.queries, batch.video_targets, cfg);
    dual_worst = std::max(dual_worst, std::abs(dual_target_loss_value(batch, cfg) - single));
    auto qs = batch.queries;
    auto ts = batch.video_targets;
    for (std::size_t i = 0; i < 16; ++i) {
      const double a = std::exp(2.0 * rng.normal());
      const double b = std::exp(2.0 * rng.normal());
      for (double& v : qs.row(i)) v *= a;
      for (double& v : ts.row(i)) v *= b;
    }
    scale_worst = std::max(scale_worst, std::abs(hn_nce_loss_value(qs, ts, cfg) - single));
  }
  verdict(3, "loss-oracle",
          info_worst < kInfoNceTol && dual_worst < kDualTol && scale_worst < kRowScaleTol,
          "InfoNCE 50 batches " + fmt("%.1e", info_worst) + " < 1e-7; dual " +
              fmt("%.1e", dual_worst) + " < 1e-9; row-scale " + fmt("%.1e", scale_worst) +
              " < 1e-6");
}

// ---------------------------------------------------------------- 4
void metric_oracle() {
  Rng rng(4242);
  std::size_t mismatches = 0, non_monotone = 0, checks = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 2 + rng.uniform_index(63);
    const std::size_t d = 2 + rng.uniform_index(15);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("g" + std::to_string(i));
    const Gallery g(ids, testutil::random_matrix<float>(n, d, rng));
    const std::size_t nq = 1 + rng.uniform_index(24);
    std::vector<RankedResult> results;
    std::vector<std::vector<std::size_t>> rankings;
    std::vector<std::size_t> target;
    std::vector<std::set<std::size_t>> sets;
    std::map<std::string, std::string> truth;
    std::map<std::string, std::set<std::string>> multi;
    for (std::size_t q = 0; q < nq; ++q) {
      std::vector<float> query(d);
      for (auto& v : query) v = static_cast<float>(rng.normal());
      const std::string qid = "q" + std::to_string(q);
      results.push_back(rank_gallery(query, g, n, qid));
      rankings.push_back(oracle::ranking(query, g));
      target.push_back(rng.uniform_index(n));
      std::set<std::size_t> s{target.back()};
      const std::size_t extra = rng.uniform_index(std::min<std::size_t>(n, 6));
      for (std::size_t e = 0; e < extra; ++e) s.insert(rng.uniform_index(n));
      sets.push_back(s);
      truth[qid] = ids[target.back()];
      for (std::size_t t : s) multi[qid].insert(ids[t]);
    }
    double prev = -1.0;
    for (std::size_t k = 1; k <= n; ++k) {
      const double r = recall_at_k(results, truth, k);
      mismatches += r != oracle::recall(rankings, target, k);
      mismatches += map_at_k(results, multi, k) != oracle::mean_ap(rankings, sets, k);
      non_monotone += r < prev;
      prev = r;
      checks += 2;
    }
  }
  verdict(4, "metric-oracle", mismatches == 0 && non_monotone == 0,
          "100 instances, " + std::to_string(checks) + " exact comparisons, " +
              std::to_string(mismatches) + " mismatches, " + std::to_string(non_monotone) +
              " recall monotonicity violations");
}

// ---------------------------------------------------------------- runs
struct SeedRun {
  double stage1_r1 = 0.0;
  double stage2_r1 = 0.0;
  double baseline_r1 = 0.0;
  double seconds = 0.0;
  std::vector<double> stage1_curve;
  std::vector<double> loss1, loss2;
  RunConfig config;
};

fs::path dataset(const fs::path& work, std::uint64_t seed) {
  const fs::path dir = work / ("data_s" + std::to_string(seed));
  if (!fs::exists(dir / "manifest.jsonl")) {
    SynthSpec spec;
    spec.seed = seed;
    write_dataset(generate(spec), dir);
  }
  return dir;
}

SeedRun train_seed(const fs::path& work, std::uint64_t seed, bool caption, const std::string& tag) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.data.dir = dataset(work, seed).string();
  cfg.model.use_caption = caption;
  cfg.out = (work / tag).string();
  const auto t0 = std::chrono::steady_clock::now();
  const TrainOutcome o = run_training(cfg);
  SeedRun r;
  r.seconds = seconds_since(t0);
  r.config = o.config;
  const auto& stages = o.report["training"]["stages"];
  r.stage1_curve = stages[0]["epoch_recall@1"].get<std::vector<double>>();
  r.loss1 = stages[0]["epoch_loss"].get<std::vector<double>>();
  r.loss2 = stages[1]["epoch_loss"].get<std::vector<double>>();
  r.stage1_r1 = r.stage1_curve.back();
  r.stage2_r1 = o.eval->recall_at.at(1);

  EvalRequest base;
  base.data = cfg.data;
  base.eval = o.config.eval;
  base.model = o.config.model;
  base.seed = seed;
  base.mode = FusionMode::kAverage;
  r.baseline_r1 = run_evaluation(base).recall_at.at(1);
  return r;
}

bool non_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[i - 1]) return false;
  }
  return true;
}

// ---------------------------------------------------------------- 5
void freezing(const fs::path& run_dir, const RunConfig& cfg) {
  const auto init = FusionModel<float>::create(cfg.model, cfg.seed);
  const auto s1 = load_checkpoint(run_dir / "checkpoints" / "stage1.ckpt");
  const auto fin = load_checkpoint(run_dir / "final.ckpt");
  const auto fusion_names = init.fusion_names();
  const std::set<std::string> fusion(fusion_names.begin(), fusion_names.end());
  std::set<std::string> stage2 = fusion;
  for (const auto& n : init.text_names()) stage2.insert(n);
  std::size_t checked = 0, changed = 0, moved1 = 0, moved2 = 0;
  for (const auto& p : init.store) {
    const MatrixF& a = p.value;
    const MatrixF& b = s1.params.at(p.name).value;
    const MatrixF& c = fin.params.at(p.name).value;
    if (!fusion.contains(p.name)) {
      ++checked;
      changed += !(a == b);
    } else {
      moved1 += !(a == b);
    }
    if (!stage2.contains(p.name)) {
      ++checked;
      changed += !(b == c);
    } else {
      moved2 += !(b == c);
    }
  }
  const auto report = nlohmann::json::parse(bytes(run_dir / "train_report.json"));
  bool library_audit = true;
  for (const auto& st : report["training"]["stages"]) {
    library_audit = library_audit && st["frozen_audit"]["changed"].empty();
  }
  verdict(5, "freezing-contract", changed == 0 && library_audit,
          std::to_string(checked) + " frozen tensor-stage pairs bit-identical (" +
              std::to_string(changed) + " changed); trainable tensors moved: stage 1 " +
              std::to_string(moved1) + "/" + std::to_string(fusion.size()) + ", stage 2 " +
              std::to_string(moved2) + "/" + std::to_string(stage2.size()));
}

// ---------------------------------------------------------------- 8
void pipeline_equivalence(const fs::path& work, const fs::path& data_dir, const fs::path& run_dir) {
  std::ostringstream out, err;
  const fs::path ing = work / "ingested";
  int code = run_cli({"ingest", "--input", (data_dir / "visual_raw.jsonl").string(), "--out",
                      ing.string()},
                     out, err);
  const std::string cfg = (run_dir / "config.resolved.json").string();
  const std::string ckpt = (run_dir / "final.ckpt").string();
  std::ostringstream a, b, e2;
  code |= run_cli({"eval", "--config", cfg, "--checkpoint", ckpt}, a, e2);
  code |= run_cli({"eval", "--config", cfg, "--checkpoint", ckpt, "--visual",
                   (ing / "visual.dump").string()},
                  b, e2);
  const bool dump_same = bytes(ing / "visual.dump") == bytes(data_dir / "visual.dump");
  const bool same = code == 0 && !a.str().empty() && a.str() == b.str();
  const bool train_same = a.str() == bytes(run_dir / "eval_report.json");
  verdict(8, "pipeline-equivalence", same && dump_same && train_same,
          "ingest-path vs datagen-path report: " + std::string(same ? "byte-identical" : "DIFFER") +
              " (" + std::to_string(a.str().size()) + " bytes); dump bytes " +
              (dump_same ? "identical" : "differ") + "; matches training eval_report: " +
              (train_same ? "yes" : "no"));
}

// ---------------------------------------------------------------- 9
void determinism(const fs::path& a, const fs::path& b) {
  std::size_t same = 0, total = 0;
  std::string differing;
  for (const char* f : {"final.ckpt", "checkpoints/stage1.ckpt", "checkpoints/latest.ckpt",
                        "train_report.json", "eval_report.json"}) {
    ++total;
    if (bytes(a / f) == bytes(b / f)) {
      ++same;
    } else {
      differing += std::string(" ") + f;
    }
  }
  verdict(9, "determinism", same == total,
          std::to_string(same) + "/" + std::to_string(total) +
              " artifacts bit-identical across two seed-0 runs" + differing);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compfuse acceptance runner"};
  std::string work = "acceptance_work";
  app.add_option("--work", work, "Scratch directory");
  CLI11_PARSE(app, argc, argv);
  const fs::path root(work);
  fs::create_directories(root);

  gradient_suite();
  structural();
  loss_oracle();
  metric_oracle();

  std::map<std::uint64_t, SeedRun> on, off;
  for (std::uint64_t s : kSeeds) {
    on[s] = train_seed(root, s, true, "run_s" + std::to_string(s));
    off[s] = train_seed(root, s, false, "run_s" + std::to_string(s) + "_nocap");
  }

  freezing(root / "run_s0", on[0].config);

  const SeedRun& r0 = on[0];
  {
    const bool ok = r0.stage1_r1 >= kStage1Floor && r0.baseline_r1 <= kBaselineCeiling &&
                    r0.stage2_r1 >= r0.stage1_r1 && r0.seconds < kLearnSeconds;
    verdict(6, "learnability", ok,
            "seed 0: stage-1 R@1 " + fmt("%.4f", r0.stage1_r1) + " >= 0.90 at epoch 10; avg baseline " +
                fmt("%.4f", r0.baseline_r1) + " <= 0.50; stage-2 R@1 " + fmt("%.4f", r0.stage2_r1) +
                " >= stage-1; " + fmt("%.0f", r0.seconds) + " s < 600 s");
    for (std::uint64_t s : kSeeds) {
      const SeedRun& r = on[s];
      info("seed " + std::to_string(s) + ": stage-1 " + fmt("%.4f", r.stage1_r1) +
           (r.stage1_r1 >= kStage1Floor ? " (>= 0.90)" : " (BELOW 0.90)") + ", stage-2 " +
           fmt("%.4f", r.stage2_r1) + (r.stage2_r1 >= r.stage1_r1 ? " (>= stage-1)" : " (BELOW stage-1)") +
           ", baseline " + fmt("%.4f", r.baseline_r1) + ", " + fmt("%.0f", r.seconds) + " s");
      std::string curve;
      for (double v : r.stage1_curve) curve += fmt(" %.3f", v);
      info("  stage-1 R@1 by epoch:" + curve);
      info(std::string("  epoch losses non-increasing: stage 1 ") +
           (non_increasing(r.loss1) ? "yes" : "no") + ", stage 2 " +
           (non_increasing(r.loss2) ? "yes" : "no"));
    }
  }

  {
    double mean_on = 0.0, mean_off = 0.0;
    std::string per;
    for (std::uint64_t s : kSeeds) {
      mean_on += on[s].stage2_r1 / kSeeds.size();
      mean_off += off[s].stage2_r1 / kSeeds.size();
      per += " s" + std::to_string(s) + " " + fmt("%.4f", on[s].stage2_r1) + "/" +
             fmt("%.4f", off[s].stage2_r1);
    }
    verdict(7, "caption-ablation", mean_off - mean_on <= kAblationMargin,
            "3-seed mean final R@1 caption-on " + fmt("%.4f", mean_on) + ", --no-caption " +
                fmt("%.4f", mean_off) + ", off - on = " + fmt("%+.4f", mean_off - mean_on) +
                " <= 0.02");
    info("on/off per seed:" + per);
    double s1_on = 0.0, s1_off = 0.0;
    for (std::uint64_t s : kSeeds) {
      s1_on += on[s].stage1_r1 / kSeeds.size();
      s1_off += off[s].stage1_r1 / kSeeds.size();
    }
    info("stage-1 3-seed mean: on " + fmt("%.4f", s1_on) + ", off " + fmt("%.4f", s1_off));
  }

  pipeline_equivalence(root, dataset(root, 0), root / "run_s0");

  train_seed(root, 0, true, "run_s0_repeat");
  determinism(root / "run_s0", root / "run_s0_repeat");

  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures == 0 ? 0 : 1;
}
