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

#include "compfuse/gradient_suite.hpp"

#include <algorithm>

#include "compfuse/errors.hpp"
#include "compfuse/model.hpp"

namespace compfuse {

namespace {

struct Sample {
  TokenIds text;
  TokenIds caption;
  TokenSequence<double> visual;
};

}  // namespace

GradCheckReport run_gradient_suite(const GradientSuiteOptions& options) {
  if (options.batch < 2) throw ConfigError("gradient suite: batch must be >= 2");
  if (options.max_len < 3) throw ConfigError("gradient suite: max_len must be >= 3");
  ModelConfig mc;
  mc.dims.dim = options.dim;
  mc.dims.heads = options.heads;
  mc.dims.init_std = options.init_std;
  mc.path1_blocks = options.path1_blocks;
  mc.vocab_size = 10;
  mc.max_len = options.max_len;
  options.loss.validate();
  FusionModel<double> model = FusionModel<double>::create(mc, options.seed);
  if (!options.corrupt.empty() && !model.store.contains(options.corrupt)) {
    throw ConfigError("gradient suite: unknown tensor '" + options.corrupt + "'");
  }

  Rng rng(options.seed ^ 0x9e3779b97f4a7c15ull);
  auto random_ids = [&] {
    TokenIds ids(2 + rng.uniform_index(options.max_len - 2));
    for (auto& id : ids) id = 2 + rng.uniform_index(mc.vocab_size - 2);
    return ids;
  };
  std::vector<Sample> samples;
  MatrixD yv(options.batch, options.dim);
  MatrixD yc(options.batch, options.dim);
  for (std::size_t b = 0; b < options.batch; ++b) {
    Sample s;
    s.text = random_ids();
    s.caption = random_ids();
    const std::size_t len = 2 + rng.uniform_index(options.max_len - 1);
    MatrixD v(len, options.dim);
    for (double& x : v.data()) x = rng.normal();
    s.visual = TokenSequence<double>::dense(std::move(v));
    if (b == 0) s.visual.mask[len - 1] = 0;
    samples.push_back(std::move(s));
    for (double& x : yv.row(b)) x = rng.normal();
    const TokenSequence<double> cap =
        surrogate_encode_text_apply(model.store, model.caption, random_ids());
    std::copy(cap.tokens.row(0).begin(), cap.tokens.row(0).end(), yc.row(b).begin());
  }

  std::vector<std::string> trainable;
  if (!options.no_params) {
    trainable = model.fusion_names();
    for (const auto& n : model.text_names()) trainable.push_back(n);
  }
  set_trainable(model.store, trainable);

  auto forward = [&](Tape<double>& tape) {
    std::vector<Var<double>> rows;
    for (const Sample& s : samples) {
      SeqVar<double> t = surrogate_encode_text(tape, model.store, model.text, s.text);
      SeqVar<double> c = surrogate_encode_text(tape, model.store, model.caption, s.caption);
      SeqVar<double> v = to_tape(tape, s.visual);
      rows.push_back(fuse(t, v, c, model.store, model.fusion, mc.use_caption).emb_mm);
    }
    Var<double> q = ops::concat_rows<double>(rows);
    return dual_target_loss(q, tape.constant(yv), tape.constant(yc), options.loss);
  };
  auto loss_fn = [&] {
    Tape<double> tape(false);
    return forward(tape).value()(0, 0);
  };
  auto backward_fn = [&] {
    Tape<double> tape;
    tape.backward(forward(tape));
    if (!options.corrupt.empty()) {
      ParamTensor<double>& p = model.store.at(options.corrupt);
      double norm = 0.0;
      for (double g : p.grad.data()) norm = std::max(norm, std::abs(g));
      p.grad.data()[0] += 0.01 * norm + 1e-3;
    }
  };
  return check_gradients(loss_fn, backward_fn, model.store, options.epsilon, options.tolerance);
}

}  // namespace compfuse
