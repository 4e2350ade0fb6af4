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

#include "compfuse/attention.hpp"

#include <algorithm>

#include "compfuse/errors.hpp"

namespace compfuse {

template <typename T>
void TokenSequence<T>::validate() const {
  if (mask.size() != tokens.rows()) {
    throw ShapeError("token sequence mask length " + std::to_string(mask.size()) +
                     " does not match " + tokens.shape_string());
  }
  if (tokens.rows() == 0 || tokens.cols() == 0) {
    throw DataError("token sequence is empty");
  }
  if (std::none_of(mask.begin(), mask.end(), [](auto b) { return b != 0; })) {
    throw DataError("token sequence has no valid token");
  }
}

template <typename T>
SeqVar<T> concat(const SeqVar<T>& first, const SeqVar<T>& second) {
  const Var<T> parts[] = {first.tokens, second.tokens};
  TokenMask mask = first.mask;
  mask.insert(mask.end(), second.mask.begin(), second.mask.end());
  return {ops::concat_rows<T>(parts), std::move(mask)};
}

void BlockDims::validate() const {
  if (dim == 0) throw ConfigError("model dim must be positive");
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError("model dim " + std::to_string(dim) +
                      " must be divisible by heads " + std::to_string(heads));
  }
  if (ffn_mult == 0) throw ConfigError("ffn_mult must be positive");
  if (!(ln_eps > 0.0)) throw ConfigError("ln_eps must be positive");
  if (!(init_std > 0.0)) throw ConfigError("init_std must be positive");
}

namespace {

template <typename T>
Matrix<T> truncated_normal(std::size_t rows, std::size_t cols, double std, Rng& rng) {
  Matrix<T> m(rows, cols);
  for (T& v : m.data()) v = static_cast<T>(rng.truncated_normal(std));
  return m;
}

template <typename T>
AttentionParams make_attention(ParamStore<T>& store, const std::string& prefix,
                               const BlockDims& dims, Rng& rng) {
  const std::size_t d = dims.dim;
  AttentionParams p;
  p.heads = dims.heads;
  p.w_q = store.add(prefix + ".w_q", truncated_normal<T>(d, d, dims.init_std, rng));
  p.w_k = store.add(prefix + ".w_k", truncated_normal<T>(d, d, dims.init_std, rng));
  p.w_v = store.add(prefix + ".w_v", truncated_normal<T>(d, d, dims.init_std, rng));
  p.w_o = store.add(prefix + ".w_o", truncated_normal<T>(d, d, dims.init_std, rng));
  return p;
}

template <typename T>
SeqVar<T> add_and_norm(const SeqVar<T>& residual, Var<T> update, ParamStore<T>& store,
                       ParamId gain, ParamId bias, double eps) {
  Tape<T>& tape = residual.tokens.tape();
  Var<T> sum = ops::add(residual.tokens, update);
  return {ops::layer_norm(sum, tape.param(store[gain]), tape.param(store[bias]),
                          static_cast<T>(eps)),
          residual.mask};
}

}  // namespace

template <typename T>
CaBlockParams make_ca_block(ParamStore<T>& store, const std::string& prefix,
                            const BlockDims& dims, Rng& rng) {
  dims.validate();
  const std::size_t d = dims.dim;
  const std::size_t hidden = d * dims.ffn_mult;
  CaBlockParams p;
  p.ln_eps = dims.ln_eps;
  p.self_attn = make_attention(store, prefix + ".self", dims, rng);
  p.cross_attn = make_attention(store, prefix + ".cross", dims, rng);
  p.ffn_in = store.add(prefix + ".ffn_in", truncated_normal<T>(d, hidden, dims.init_std, rng));
  p.ffn_in_bias = store.add(prefix + ".ffn_in_bias", Matrix<T>(1, hidden));
  p.ffn_out = store.add(prefix + ".ffn_out", truncated_normal<T>(hidden, d, dims.init_std, rng));
  p.ffn_out_bias = store.add(prefix + ".ffn_out_bias", Matrix<T>(1, d));
  p.ln1_gain = store.add(prefix + ".ln1_gain", Matrix<T>(1, d, T{1}));
  p.ln1_bias = store.add(prefix + ".ln1_bias", Matrix<T>(1, d));
  p.ln2_gain = store.add(prefix + ".ln2_gain", Matrix<T>(1, d, T{1}));
  p.ln2_bias = store.add(prefix + ".ln2_bias", Matrix<T>(1, d));
  p.ln3_gain = store.add(prefix + ".ln3_gain", Matrix<T>(1, d, T{1}));
  p.ln3_bias = store.add(prefix + ".ln3_bias", Matrix<T>(1, d));
  return p;
}

std::vector<std::string> ca_block_param_names(const std::string& prefix) {
  std::vector<std::string> names;
  for (const char* sub : {".self", ".cross"}) {
    for (const char* w : {".w_q", ".w_k", ".w_v", ".w_o"}) {
      names.push_back(prefix + sub + w);
    }
  }
  for (const char* n : {".ffn_in", ".ffn_in_bias", ".ffn_out", ".ffn_out_bias",
                        ".ln1_gain", ".ln1_bias", ".ln2_gain", ".ln2_bias",
                        ".ln3_gain", ".ln3_bias"}) {
    names.push_back(prefix + n);
  }
  return names;
}

template <typename T>
SeqVar<T> multi_head_attention(const SeqVar<T>& q, const SeqVar<T>& kv,
                               ParamStore<T>& store, const AttentionParams& p) {
  if (q.dim() != kv.dim()) {
    throw ShapeError("multi_head_attention: query width " + std::to_string(q.dim()) +
                     " differs from key/value width " + std::to_string(kv.dim()));
  }
  if (kv.mask.size() != kv.length() || q.mask.size() != q.length()) {
    throw ShapeError("multi_head_attention: mask length mismatch");
  }
  Tape<T>& tape = q.tokens.tape();
  Var<T> qp = ops::matmul(q.tokens, tape.param(store[p.w_q]));
  Var<T> kp = ops::matmul(kv.tokens, tape.param(store[p.w_k]));
  Var<T> vp = ops::matmul(kv.tokens, tape.param(store[p.w_v]));
  Var<T> heads = ops::attention(qp, kp, vp, kv.mask, p.heads);
  return {ops::matmul(heads, tape.param(store[p.w_o])), q.mask};
}

template <typename T>
SeqVar<T> ca_block_forward(const SeqVar<T>& q, const SeqVar<T>& kv,
                           ParamStore<T>& store, const CaBlockParams& p) {
  Tape<T>& tape = q.tokens.tape();
  const SeqVar<T> sa = multi_head_attention(q, q, store, p.self_attn);
  const SeqVar<T> x1 = add_and_norm(q, sa.tokens, store, p.ln1_gain, p.ln1_bias, p.ln_eps);
  const SeqVar<T> ca = multi_head_attention(x1, kv, store, p.cross_attn);
  const SeqVar<T> x2 = add_and_norm(x1, ca.tokens, store, p.ln2_gain, p.ln2_bias, p.ln_eps);
  Var<T> hidden = ops::gelu(ops::add_row(ops::matmul(x2.tokens, tape.param(store[p.ffn_in])),
                                         tape.param(store[p.ffn_in_bias])));
  Var<T> ffn = ops::add_row(ops::matmul(hidden, tape.param(store[p.ffn_out])),
                            tape.param(store[p.ffn_out_bias]));
  return add_and_norm(x2, ffn, store, p.ln3_gain, p.ln3_bias, p.ln_eps);
}

template <typename T>
std::vector<Matrix<T>> cross_attention_weights(const TokenSequence<T>& q,
                                               const TokenSequence<T>& kv,
                                               ParamStore<T>& store,
                                               const CaBlockParams& p) {
  Tape<T> tape(false);
  const SeqVar<T> qs = to_tape(tape, q);
  const SeqVar<T> sa = multi_head_attention(qs, qs, store, p.self_attn);
  const SeqVar<T> x1 = add_and_norm(qs, sa.tokens, store, p.ln1_gain, p.ln1_bias, p.ln_eps);
  const Matrix<T> qp = matmul(x1.tokens.value(), store[p.cross_attn.w_q].value);
  const Matrix<T> kp = matmul(kv.tokens, store[p.cross_attn.w_k].value);
  return attention_probabilities(qp, kp, kv.mask, p.cross_attn.heads);
}

template <typename T>
TokenSequence<T> ca_block_apply(const TokenSequence<T>& q, const TokenSequence<T>& kv,
                                ParamStore<T>& store, const CaBlockParams& p) {
  Tape<T> tape(false);
  return from_tape(ca_block_forward(to_tape(tape, q), to_tape(tape, kv), store, p));
}

#define COMPFUSE_INSTANTIATE(T)                                                        \
  template struct TokenSequence<T>;                                                    \
  template SeqVar<T> concat(const SeqVar<T>&, const SeqVar<T>&);                      \
  template CaBlockParams make_ca_block(ParamStore<T>&, const std::string&,            \
                                       const BlockDims&, Rng&);                       \
  template SeqVar<T> multi_head_attention(const SeqVar<T>&, const SeqVar<T>&,         \
                                          ParamStore<T>&, const AttentionParams&);    \
  template SeqVar<T> ca_block_forward(const SeqVar<T>&, const SeqVar<T>&,             \
                                      ParamStore<T>&, const CaBlockParams&);          \
  template std::vector<Matrix<T>> cross_attention_weights(                            \
      const TokenSequence<T>&, const TokenSequence<T>&, ParamStore<T>&,               \
      const CaBlockParams&);                                                           \
  template TokenSequence<T> ca_block_apply(const TokenSequence<T>&,                   \
                                           const TokenSequence<T>&, ParamStore<T>&,   \
                                           const CaBlockParams&);

COMPFUSE_INSTANTIATE(float)
COMPFUSE_INSTANTIATE(double)
#undef COMPFUSE_INSTANTIATE

}  // namespace compfuse
