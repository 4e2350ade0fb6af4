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

#include "compfuse/fusion.hpp"

#include "compfuse/errors.hpp"

namespace compfuse {

template <typename T>
FusionParams make_fusion(ParamStore<T>& store, const BlockDims& dims,
                         std::size_t path1_blocks, Rng& rng) {
  if (path1_blocks == 0) throw ConfigError("path1_blocks must be at least 1");
  FusionParams p;
  for (std::size_t i = 0; i < path1_blocks; ++i) {
    p.path1.push_back(make_ca_block(store, "fusion.path1." + std::to_string(i), dims, rng));
  }
  p.path2_vt = make_ca_block(store, "fusion.path2.vt", dims, rng);
  p.path2_tv = make_ca_block(store, "fusion.path2.tv", dims, rng);
  return p;
}

std::vector<std::string> fusion_param_names(std::size_t path1_blocks) {
  std::vector<std::string> names;
  auto append = [&names](const std::string& prefix) {
    for (auto& n : ca_block_param_names(prefix)) names.push_back(std::move(n));
  };
  for (std::size_t i = 0; i < path1_blocks; ++i) append("fusion.path1." + std::to_string(i));
  append("fusion.path2.vt");
  append("fusion.path2.tv");
  return names;
}

namespace {

template <typename T>
void require_same_dim(const SeqVar<T>& a, const SeqVar<T>& b, const char* what) {
  if (a.dim() != b.dim()) {
    throw ShapeError(std::string("fusion: ") + what + " width " + std::to_string(b.dim()) +
                     " differs from text width " + std::to_string(a.dim()));
  }
}

}  // namespace

template <typename T>
SeqVar<T> fuse_path1(const SeqVar<T>& emb_t, const SeqVar<T>& emb_c, const SeqVar<T>& emb_v,
                     ParamStore<T>& store, const FusionParams& p, bool use_caption) {
  require_same_dim(emb_t, emb_v, "visual");
  SeqVar<T> kv = emb_v;
  if (use_caption) {
    require_same_dim(emb_t, emb_c, "caption");
    kv = concat(emb_c, emb_v);
  }
  SeqVar<T> x = emb_t;
  for (const CaBlockParams& block : p.path1) x = ca_block_forward(x, kv, store, block);
  return x;
}

template <typename T>
SeqVar<T> fuse_path2(const SeqVar<T>& emb_t, const SeqVar<T>& emb_v, ParamStore<T>& store,
                     const FusionParams& p) {
  require_same_dim(emb_t, emb_v, "visual");
  const SeqVar<T> emb_vt = ca_block_forward(emb_v, emb_t, store, p.path2_vt);
  return ca_block_forward(emb_t, emb_vt, store, p.path2_tv);
}

template <typename T>
FusionVars<T> fuse(const SeqVar<T>& emb_t, const SeqVar<T>& emb_v, const SeqVar<T>& emb_c,
                   ParamStore<T>& store, const FusionParams& p, bool use_caption) {
  const SeqVar<T> path1 = fuse_path1(emb_t, emb_c, emb_v, store, p, use_caption);
  const SeqVar<T> path2 = fuse_path2(emb_t, emb_v, store, p);
  FusionVars<T> out;
  out.emb_tv = ops::row(path1.tokens, 0);
  out.emb_tv_prime = ops::row(path2.tokens, 0);
  out.emb_mm = ops::scale(ops::add(out.emb_tv, out.emb_tv_prime), T{0.5});
  return out;
}

template <typename T>
FusionOutput<T> fuse_apply(const TokenSequence<T>& emb_t, const TokenSequence<T>& emb_v,
                           const TokenSequence<T>& emb_c, ParamStore<T>& store,
                           const FusionParams& p, bool use_caption) {
  Tape<T> tape(false);
  const FusionVars<T> v = fuse(to_tape(tape, emb_t), to_tape(tape, emb_v),
                               to_tape(tape, emb_c), store, p, use_caption);
  auto vec = [](Var<T> x) {
    auto d = x.value().data();
    return std::vector<T>(d.begin(), d.end());
  };
  return {vec(v.emb_tv), vec(v.emb_tv_prime), vec(v.emb_mm)};
}

#define COMPFUSE_INSTANTIATE(T)                                                          \
  template FusionParams make_fusion(ParamStore<T>&, const BlockDims&, std::size_t, Rng&); \
  template SeqVar<T> fuse_path1(const SeqVar<T>&, const SeqVar<T>&, const SeqVar<T>&,     \
                                ParamStore<T>&, const FusionParams&, bool);              \
  template SeqVar<T> fuse_path2(const SeqVar<T>&, const SeqVar<T>&, ParamStore<T>&,      \
                                const FusionParams&);                                    \
  template FusionVars<T> fuse(const SeqVar<T>&, const SeqVar<T>&, const SeqVar<T>&,      \
                              ParamStore<T>&, const FusionParams&, bool);                \
  template FusionOutput<T> fuse_apply(const TokenSequence<T>&, const TokenSequence<T>&,  \
                                      const TokenSequence<T>&, ParamStore<T>&,           \
                                      const FusionParams&, bool);

COMPFUSE_INSTANTIATE(float)
COMPFUSE_INSTANTIATE(double)
#undef COMPFUSE_INSTANTIATE

}  // namespace compfuse
