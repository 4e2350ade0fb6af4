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

// Two-path fusion adapter producing the joint query embedding.
//
//   path 1: text tokens attend to [caption tokens, visual tokens] through a
//           stack of CA-Blocks (every block re-attends to the same
//           concatenation).
//   path 2: visual tokens attend to text (emb_vt), then text attends to
//           emb_vt.
//
// Each path contributes its class token; emb_mm is their element-wise mean.

#include <cstddef>
#include <string>
#include <vector>

#include "compfuse/attention.hpp"

namespace compfuse {

struct FusionParams {
  std::vector<CaBlockParams> path1;
  CaBlockParams path2_vt;
  CaBlockParams path2_tv;
};

// Registers "fusion.path1.<i>", "fusion.path2.vt" and "fusion.path2.tv".
template <typename T>
FusionParams make_fusion(ParamStore<T>& store, const BlockDims& dims,
                         std::size_t path1_blocks, Rng& rng);

std::vector<std::string> fusion_param_names(std::size_t path1_blocks);

// Output keeps emb_t's length and mask. With use_caption = false the
// key/value sequence is emb_v alone.
template <typename T>
SeqVar<T> fuse_path1(const SeqVar<T>& emb_t, const SeqVar<T>& emb_c, const SeqVar<T>& emb_v,
                     ParamStore<T>& store, const FusionParams& p, bool use_caption = true);

// emb_vt keeps emb_v's mask.
template <typename T>
SeqVar<T> fuse_path2(const SeqVar<T>& emb_t, const SeqVar<T>& emb_v, ParamStore<T>& store,
                     const FusionParams& p);

template <typename T>
struct FusionVars {
  Var<T> emb_tv;        // 1 x d
  Var<T> emb_tv_prime;  // 1 x d
  Var<T> emb_mm;        // 1 x d
};

template <typename T>
FusionVars<T> fuse(const SeqVar<T>& emb_t, const SeqVar<T>& emb_v, const SeqVar<T>& emb_c,
                   ParamStore<T>& store, const FusionParams& p, bool use_caption = true);

template <typename T>
struct FusionOutput {
  std::vector<T> emb_tv;
  std::vector<T> emb_tv_prime;
  std::vector<T> emb_mm;
};

template <typename T>
FusionOutput<T> fuse_apply(const TokenSequence<T>& emb_t, const TokenSequence<T>& emb_v,
                           const TokenSequence<T>& emb_c, ParamStore<T>& store,
                           const FusionParams& p, bool use_caption = true);

}  // namespace compfuse
