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

// CA-Block: self-attention over the query tokens, then cross-attention from
// the query tokens to a key/value sequence, then a GELU feed-forward
// network. Each sublayer is followed by a residual add and layer norm
// (post-norm, BERT layout). No positional information is added inside a
// block, so the output does not depend on key/value token order.

#include <cstddef>
#include <string>
#include <vector>

#include "compfuse/matrix.hpp"
#include "compfuse/numerics.hpp"
#include "compfuse/param_store.hpp"
#include "compfuse/rng.hpp"
#include "compfuse/tape.hpp"

namespace compfuse {

// L x d token rows plus a validity mask. Row 0 is the class token.
template <typename T>
struct TokenSequence {
  Matrix<T> tokens;
  TokenMask mask;

  std::size_t length() const { return tokens.rows(); }
  std::size_t dim() const { return tokens.cols(); }

  // All-valid sequence.
  static TokenSequence dense(Matrix<T> tokens) {
    TokenMask mask(tokens.rows(), 1);
    return {std::move(tokens), std::move(mask)};
  }

  // Throws ShapeError / DataError when the invariants do not hold.
  void validate() const;
};

// Tape-resident counterpart of TokenSequence.
template <typename T>
struct SeqVar {
  Var<T> tokens;
  TokenMask mask;

  std::size_t length() const { return tokens.rows(); }
  std::size_t dim() const { return tokens.cols(); }
};

template <typename T>
SeqVar<T> to_tape(Tape<T>& tape, const TokenSequence<T>& seq) {
  seq.validate();
  return {tape.constant(seq.tokens), seq.mask};
}

template <typename T>
TokenSequence<T> from_tape(const SeqVar<T>& seq) {
  return {seq.tokens.value(), seq.mask};
}

// Sequence concatenation along the token axis; masks follow the same order.
template <typename T>
SeqVar<T> concat(const SeqVar<T>& first, const SeqVar<T>& second);

struct BlockDims {
  std::size_t dim = 32;
  std::size_t heads = 4;
  std::size_t ffn_mult = 4;
  double ln_eps = 1e-5;
  double init_std = 0.02;

  void validate() const;
};

using ParamId = std::size_t;

struct AttentionParams {
  ParamId w_q = 0;
  ParamId w_k = 0;
  ParamId w_v = 0;
  ParamId w_o = 0;
  std::size_t heads = 1;
};

struct CaBlockParams {
  AttentionParams self_attn;
  AttentionParams cross_attn;
  ParamId ffn_in = 0;
  ParamId ffn_in_bias = 0;
  ParamId ffn_out = 0;
  ParamId ffn_out_bias = 0;
  ParamId ln1_gain = 0;
  ParamId ln1_bias = 0;
  ParamId ln2_gain = 0;
  ParamId ln2_bias = 0;
  ParamId ln3_gain = 0;
  ParamId ln3_bias = 0;
  double ln_eps = 1e-5;
};

// Registers the block's tensors under `prefix` (e.g. "fusion.path1.0").
// Projections draw from a truncated normal with dims.init_std, biases start
// at zero and layer-norm gains at one.
template <typename T>
CaBlockParams make_ca_block(ParamStore<T>& store, const std::string& prefix,
                            const BlockDims& dims, Rng& rng);

// Names of every tensor registered by make_ca_block for `prefix`.
std::vector<std::string> ca_block_param_names(const std::string& prefix);

// Projects q with w_q and kv with w_k / w_v, attends per head with
// 1/sqrt(d/h) scaling and projects the concatenated heads with w_o. The
// result keeps q's mask.
template <typename T>
SeqVar<T> multi_head_attention(const SeqVar<T>& q, const SeqVar<T>& kv,
                               ParamStore<T>& store, const AttentionParams& p);

template <typename T>
SeqVar<T> ca_block_forward(const SeqVar<T>& q, const SeqVar<T>& kv,
                           ParamStore<T>& store, const CaBlockParams& p);

// Post-mask, post-softmax attention weights of the cross-attention sublayer
// for the given block inputs, one (Lq x Lkv) matrix per head. Inspection
// only.
template <typename T>
std::vector<Matrix<T>> cross_attention_weights(const TokenSequence<T>& q,
                                               const TokenSequence<T>& kv,
                                               ParamStore<T>& store,
                                               const CaBlockParams& p);

// Value-level convenience wrapper over a non-recording tape.
template <typename T>
TokenSequence<T> ca_block_apply(const TokenSequence<T>& q, const TokenSequence<T>& kv,
                                ParamStore<T>& store, const CaBlockParams& p);

}  // namespace compfuse
