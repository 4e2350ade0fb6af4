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

#include "compfuse/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "compfuse/errors.hpp"

namespace compfuse {

DataPaths DataPaths::in(const std::filesystem::path& dir) {
  return {dir / "visual.dump", dir / "gallery.jsonl", dir / "manifest.jsonl", dir / "vocab.json"};
}

DataBundle load_data_bundle(const DataPaths& paths) {
  DataBundle b;
  b.visual = load_dump(paths.visual);
  b.gallery_items = read_gallery_items(paths.gallery);
  b.triplets = read_manifest(paths.manifest);
  b.vocab = read_vocabulary(paths.vocab);
  return b;
}

namespace {

TokenSequence<float> pooled_frames(const EmbeddingDump& visual,
                                   const std::vector<std::string>& keys,
                                   const std::string& owner) {
  std::vector<TokenSequence<float>> frames;
  frames.reserve(keys.size());
  for (const auto& k : keys) {
    const TokenSequence<float>* s = visual.find(k);
    if (s == nullptr) throw DataError(owner + ": frame '" + k + "' not in visual dump");
    frames.push_back(*s);
  }
  try {
    return encode_video<float>(frames);
  } catch (const ShapeError& e) {
    throw DataError(owner + ": " + e.what());
  }
}

}  // namespace

Gallery build_gallery(const EmbeddingDump& visual, std::span<const GalleryItem> items) {
  std::vector<std::string> ids;
  MatrixF emb(items.size(), visual.dim());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const TokenSequence<float> v =
        pooled_frames(visual, items[i].frame_keys, "gallery item '" + items[i].id + "'");
    auto cls = v.tokens.row(0);
    std::copy(cls.begin(), cls.end(), emb.row(i).begin());
    ids.push_back(items[i].id);
  }
  return Gallery(std::move(ids), std::move(emb));
}

std::vector<ResolvedTriplet> resolve_triplets(const DataBundle& data, const Gallery& gallery,
                                              const std::string& split) {
  std::vector<ResolvedTriplet> out;
  for (const TrainingTriplet& t : data.triplets) {
    if (!split.empty() && t.split != split) continue;
    const std::string owner = "triplet '" + t.query_id + "'";
    auto lookup = [&](const std::string& id) {
      auto idx = gallery.index_of(id);
      if (!idx) throw DataError(owner + ": id '" + id + "' not in gallery");
      return *idx;
    };
    auto tokens = [&](const TextInput& text) {
      try {
        return data.vocab.encode(text);
      } catch (const DataError& e) {
        throw DataError(owner + ": " + e.what());
      }
    };
    ResolvedTriplet r;
    r.query_id = t.query_id;
    r.split = t.split;
    r.q_v = pooled_frames(data.visual, t.visual_keys, owner);
    r.q_t = tokens(t.q_t);
    if (r.q_t.empty()) throw DataError(owner + ": empty modification text");
    r.q_c = tokens(t.q_c);
    r.target_caption = tokens(t.target_caption);
    r.target = lookup(t.target_video_id);
    for (const auto& id : t.target_ids) r.targets.push_back(lookup(id));
    if (!t.reference_id.empty()) r.reference = lookup(t.reference_id);
    r.exclude_reference = t.exclude_reference;
    out.push_back(std::move(r));
  }
  return out;
}

FusionMode fusion_mode_from_string(const std::string& s) {
  if (s == "model") return FusionMode::kModel;
  if (s == "average") return FusionMode::kAverage;
  if (s == "identity") return FusionMode::kIdentityOnTarget;
  throw ConfigError("unknown fusion mode '" + s + "' (model, average, identity)");
}

std::string to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::kModel:
      return "model";
    case FusionMode::kAverage:
      return "average";
    case FusionMode::kIdentityOnTarget:
      return "identity";
  }
  return "model";
}

std::vector<float> encode_caption_pooled(FusionModel<float>& model, const TokenIds& ids) {
  const TokenSequence<float> c = surrogate_encode_text_apply(model.store, model.caption, ids);
  auto cls = c.tokens.row(0);
  return {cls.begin(), cls.end()};
}

namespace {

std::vector<float> unit(std::span<const float> x, const std::string& what) {
  double ss = 0.0;
  for (float v : x) ss += static_cast<double>(v) * v;
  if (!(ss > 0.0)) throw NumericError(what + " has zero norm");
  const double inv = 1.0 / std::sqrt(ss);
  std::vector<float> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<float>(x[i] * inv);
  return out;
}

}  // namespace

std::vector<float> embed_query(FusionModel<float>& model, const ResolvedTriplet& q,
                               const Gallery& gallery, FusionMode mode) {
  switch (mode) {
    case FusionMode::kIdentityOnTarget: {
      auto row = gallery.row(q.target);
      return {row.begin(), row.end()};
    }
    case FusionMode::kAverage: {
      const TokenSequence<float> t = surrogate_encode_text_apply(model.store, model.text, q.q_t);
      const auto a = unit(q.q_v.tokens.row(0), "query '" + q.query_id + "' visual");
      const auto b = unit(t.tokens.row(0), "query '" + q.query_id + "' text");
      std::vector<float> out(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] + b[i]) * 0.5f;
      return out;
    }
    case FusionMode::kModel:
      break;
  }
  const TokenSequence<float> t = surrogate_encode_text_apply(model.store, model.text, q.q_t);
  const TokenSequence<float> c = surrogate_encode_text_apply(model.store, model.caption, q.q_c);
  return fuse_apply(t, q.q_v, c, model.store, model.fusion, model.config.use_caption).emb_mm;
}

void EvalOptions::validate(std::size_t gallery_size) const {
  if (recall_ks.empty() && map_ks.empty()) throw ConfigError("eval: no K values given");
  for (const auto* ks : {&recall_ks, &map_ks}) {
    for (std::size_t k : *ks) {
      if (k == 0) throw ConfigError("eval: K must be positive");
      if (k > gallery_size) {
        throw ConfigError("eval: K=" + std::to_string(k) + " exceeds gallery size " +
                          std::to_string(gallery_size));
      }
    }
  }
}

EvalReport evaluate(FusionModel<float>& model, std::span<const ResolvedTriplet> queries,
                    const Gallery& gallery, const EvalOptions& options) {
  options.validate(gallery.size());
  std::size_t depth = 0;
  for (std::size_t k : options.recall_ks) depth = std::max(depth, k);
  for (std::size_t k : options.map_ks) depth = std::max(depth, k);

  std::vector<RankedResult> results;
  std::map<std::string, std::string> truth;
  std::map<std::string, std::set<std::string>> truth_sets;
  EvalReport report;
  results.reserve(queries.size());
  for (const ResolvedTriplet& q : queries) {
    const std::vector<float> emb = embed_query(model, q, gallery, options.mode);
    std::vector<std::size_t> excluded;
    if (q.exclude_reference && q.reference) excluded.push_back(*q.reference);
    const std::size_t k = std::min(depth, gallery.size() - excluded.size());
    results.push_back(rank_gallery(emb, gallery, k, q.query_id, excluded));
    if (!truth.emplace(q.query_id, gallery.ids()[q.target]).second) {
      throw DataError("evaluate: duplicate query id '" + q.query_id + "'");
    }
    auto& set = truth_sets[q.query_id];
    for (std::size_t t : q.targets) set.insert(gallery.ids()[t]);

    if (options.keep_queries) {
      QueryRecord rec;
      rec.query_id = q.query_id;
      for (std::size_t t : q.targets) rec.targets.push_back(gallery.ids()[t]);
      const RankedResult& r = results.back();
      for (std::size_t i = 0; i < r.items.size(); ++i) {
        rec.top.push_back(r.items[i].id);
        if (!rec.first_hit && set.contains(r.items[i].id)) rec.first_hit = i + 1;
      }
      report.queries.push_back(std::move(rec));
    }
  }
  report.num_queries = results.size();
  for (std::size_t k : options.recall_ks) report.recall_at[k] = recall_at_k(results, truth, k);
  for (std::size_t k : options.map_ks) report.map_at[k] = map_at_k(results, truth_sets, k);
  return report;
}

}  // namespace compfuse
