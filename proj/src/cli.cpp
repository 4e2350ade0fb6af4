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

#include "compfuse/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <optional>

#include <CLI11.hpp>

#include "compfuse/data.hpp"
#include "compfuse/datagen.hpp"
#include "compfuse/errors.hpp"
#include "compfuse/gradient_suite.hpp"
#include "compfuse/kernels.hpp"
#include "compfuse/run.hpp"

namespace compfuse {

namespace {

void print_eval_summary(const EvalReport& r, std::ostream& out) {
  out << "queries " << r.num_queries << "\n";
  for (const auto& [k, v] : r.recall_at) out << "recall@" << k << " " << v << "\n";
  for (const auto& [k, v] : r.map_at) out << "mAP@" << k << " " << v << "\n";
}

int cmd_synth(const SynthSpec& spec, const std::string& spec_file, const std::string& out_dir,
              bool raw, std::ostream& out) {
  SynthSpec s = spec;
  if (!spec_file.empty()) {
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(read_text_file(spec_file));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(spec_file + ": " + e.what());
    }
    s = SynthSpec::from_json(j);
  }
  const SynthDataset data = generate(s);
  write_dataset(data, out_dir, raw);
  out << "wrote " << data.triplets.size() << " triplets, " << data.gallery_items.size()
      << " gallery items to " << out_dir << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string stage;
  std::string resume;
  std::string out;
  std::string data;
  std::string ks;
  bool no_caption = false;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> halt_after;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = RunConfig::load(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (!a.stage.empty()) cfg.stages = a.stage;
  if (!a.out.empty()) cfg.out = a.out;
  if (!a.data.empty()) cfg.data.dir = a.data;
  if (!a.ks.empty()) cfg.eval.recall_ks = parse_k_list(a.ks);
  if (a.no_caption) cfg.model.use_caption = false;
  if (a.epochs) cfg.stage1.epochs = cfg.stage2.epochs = *a.epochs;
  cfg.validate();
  TrainOptions opts;
  opts.resume = a.resume;
  opts.halt_after_epochs = a.halt_after;
  opts.log = &err;
  const TrainOutcome o = run_training(cfg, opts);
  if (o.result.halted) {
    out << "halted; resume from " << (std::filesystem::path(o.config.out) / "checkpoints" /
                                      "latest.ckpt").string()
        << "\n";
    return kExitOk;
  }
  if (o.eval) print_eval_summary(*o.eval, out);
  out << "outputs in " << o.config.out << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string config;
  std::string checkpoint;
  std::string data;
  std::string visual;
  std::string ks;
  std::string map_ks;
  std::string split;
  std::string mode = "model";
  bool shim = false;
  bool no_caption = false;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  EvalRequest req;
  if (!a.config.empty()) {
    const RunConfig cfg = RunConfig::load(a.config);
    req.data = cfg.data;
    req.eval = cfg.eval;
    req.model = cfg.model;
    req.seed = cfg.seed;
  } else {
    req.infer_dim = true;
  }
  req.checkpoint = a.checkpoint;
  if (!a.data.empty()) req.data.dir = a.data;
  if (!a.visual.empty()) req.data.visual = a.visual;
  if (!a.ks.empty()) req.eval.recall_ks = parse_k_list(a.ks);
  if (!a.map_ks.empty()) req.eval.map_ks = parse_k_list(a.map_ks);
  if (!a.split.empty()) req.eval.split = a.split;
  if (a.seed) req.seed = *a.seed;
  if (a.no_caption) req.model.use_caption = false;
  req.mode = a.shim ? FusionMode::kIdentityOnTarget : fusion_mode_from_string(a.mode);
  const EvalReport report = run_evaluation(req);
  if (a.out.empty()) {
    out << report.to_json_string();
  } else {
    std::error_code ec;
    std::filesystem::create_directories(a.out, ec);
    if (ec) throw DataError("cannot create " + a.out + ": " + ec.message());
    write_text_file(std::filesystem::path(a.out) / "eval_report.json", report.to_json_string());
    print_eval_summary(report, out);
  }
  return kExitOk;
}

int cmd_gradcheck(const GradientSuiteOptions& o, std::ostream& out) {
  const GradCheckReport r = run_gradient_suite(o);
  std::size_t width = 6;
  for (const auto& row : r.rows) width = std::max(width, row.name.size());
  out << std::left << std::setw(static_cast<int>(width)) << "tensor"
      << "  elements  rel_error     max_abs_error  result\n";
  for (const auto& row : r.rows) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "  %8zu  %.3e     %.3e      %s", row.elements,
                  row.relative_error, row.max_abs_error, row.passed ? "PASS" : "FAIL");
    out << std::left << std::setw(static_cast<int>(width)) << row.name << buf << "\n";
  }
  out << r.rows.size() << " tensors, " << (r.passed() ? "all pass" : "FAILURES") << " (tol "
      << o.tolerance << ", eps " << o.epsilon << ")\n";
  return r.passed() ? kExitOk : kExitNumeric;
}

int cmd_ingest(const std::string& input, const std::string& out_dir, const std::string& name,
               std::ostream& out) {
  const EmbeddingDump dump = read_raw_embeddings(input);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir + ": " + ec.message());
  const std::filesystem::path path = std::filesystem::path(out_dir) / name;
  const std::string bytes = dump.serialize();
  write_text_file(path, bytes);
  if (load_dump(path).serialize() != bytes) {
    throw InternalError("ingest: dump did not round-trip");
  }
  out << "ingested " << dump.size() << " embeddings of width " << dump.dim() << " into "
      << path.string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-attention fusion adapter for composed retrieval"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  std::string backend = "auto";
  app.add_option("--kernels", backend, "Kernel backend")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

  SynthSpec spec;
  std::string synth_out;
  std::string spec_file;
  bool no_raw = false;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic compositional dataset");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--spec", spec_file, "Spec JSON (overrides flags)");
  synth->add_option("--attributes", spec.attributes, "Attribute count A");
  synth->add_option("--values", spec.values, "Values per attribute Vn");
  synth->add_option("--dim", spec.dim, "Embedding width d");
  synth->add_option("--gallery", spec.gallery_size, "Gallery size N");
  synth->add_option("--triplets", spec.triplets, "Triplet count T");
  synth->add_option("--sigma", spec.sigma, "Noise level");
  synth->add_option("--frames", spec.frames, "Frames per video");
  synth->add_option("--test-fraction", spec.test_fraction, "Held-out triplet fraction");
  synth->add_option("--seed", spec.seed, "Seed");
  synth->add_flag("--exclude-reference", spec.exclude_reference,
                  "Drop each query's reference from its ranking");
  synth->add_flag("--no-raw", no_raw, "Skip visual_raw.jsonl");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Two-stage training");
  train->add_option("--config", ta.config, "Run config JSON")->required();
  train->add_option("--seed", ta.seed, "Seed override");
  train->add_option("--stage", ta.stage, "Stages to run")->check(CLI::IsMember({"1", "2", "both"}));
  train->add_option("--resume", ta.resume, "Checkpoint to resume from");
  train->add_option("--out", ta.out, "Output directory override");
  train->add_option("--data", ta.data, "Dataset directory override");
  train->add_option("--ks", ta.ks, "Recall K list, e.g. 1,5,10");
  train->add_flag("--no-caption", ta.no_caption, "Drop the caption from fusion path 1");
  train->add_option("--epochs", ta.epochs, "Epoch override for both stages");
  train->add_option("--halt-after", ta.halt_after, "Stop after this many epochs")
      ->group("");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate retrieval");
  eval->add_option("--config", ea.config, "Run config JSON");
  eval->add_option("--checkpoint", ea.checkpoint, "Checkpoint file");
  eval->add_option("--data", ea.data, "Dataset directory");
  eval->add_option("--visual", ea.visual, "Visual dump override");
  eval->add_option("--ks", ea.ks, "Recall K list");
  eval->add_option("--map-ks", ea.map_ks, "mAP K list");
  eval->add_option("--split", ea.split, "Manifest split");
  eval->add_option("--mode", ea.mode, "Fusion mode")
      ->check(CLI::IsMember({"model", "average", "identity"}));
  eval->add_flag("--shim", ea.shim, "Identity-on-target fusion");
  eval->add_flag("--no-caption", ea.no_caption, "Fresh model without caption path");
  eval->add_option("--seed", ea.seed, "Seed for a fresh model");
  eval->add_option("--out", ea.out, "Output directory for eval_report.json");

  GradientSuiteOptions go;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  grad->add_option("--seed", go.seed, "Seed");
  grad->add_option("--dim", go.dim, "Model width");
  grad->add_option("--heads", go.heads, "Attention heads");
  grad->add_option("--batch", go.batch, "Batch size");
  grad->add_option("--max-len", go.max_len, "Longest sequence");
  grad->add_option("--init-std", go.init_std, "Parameter scale");
  grad->add_option("--eps", go.epsilon, "Central-difference step");
  grad->add_option("--tol", go.tolerance, "Relative error tolerance");
  grad->add_option("--temperature", go.loss.temperature, "Loss temperature");
  grad->add_option("--corrupt", go.corrupt, "Perturb this tensor's analytic gradient");
  grad->add_flag("--no-params", go.no_params, "Freeze every tensor");

  std::string ingest_in;
  std::string ingest_out;
  std::string ingest_name = "visual.dump";
  auto* ingest = app.add_subcommand("ingest", "Convert raw JSONL embeddings to a dump");
  ingest->add_option("--input", ingest_in, "Raw embeddings (JSON lines)")->required();
  ingest->add_option("--out", ingest_out, "Output directory")->required();
  ingest->add_option("--name", ingest_name, "Dump file name");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (backend == "scalar") kernels::set_backend(kernels::Backend::kScalar);
    if (backend == "avx2") kernels::set_backend(kernels::Backend::kAvx2);
    if (synth->parsed()) return cmd_synth(spec, spec_file, synth_out, !no_raw, out);
    if (train->parsed()) return cmd_train(ta, out, err);
    if (eval->parsed()) return cmd_eval(ea, out);
    if (grad->parsed()) return cmd_gradcheck(go, out);
    if (ingest->parsed()) return cmd_ingest(ingest_in, ingest_out, ingest_name, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ShapeError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace compfuse
