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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "compfuse/data.hpp"
#include "compfuse/encoders.hpp"
#include "compfuse/model.hpp"
#include "compfuse/retrieval.hpp"

namespace compfuse {

struct DataPaths {
  std::filesystem::path visual;
  std::filesystem::path gallery;
  std::filesystem::path manifest;
  std::filesystem::path vocab;

  // Standard file names inside a dataset directory.
  static DataPaths in(const std::filesystem::path& dir);
};

struct DataBundle {
  EmbeddingDump visual;
  std::vector<GalleryItem> gallery_items;
  std::vector<TrainingTriplet> triplets;
  Vocabulary vocab;
};

DataBundle load_data_bundle(const DataPaths& paths);

// Pooled class token of the frame-averaged sequence for every item.
Gallery build_gallery(const EmbeddingDump& visual, std::span<const GalleryItem> items);

struct ResolvedTriplet {
  std::string query_id;
  std::string split;
  TokenSequence<float> q_v;
  TokenIds q_t;
  TokenIds q_c;
  TokenIds target_caption;
  std::size_t target = 0;             // gallery index
  std::vector<std::size_t> targets;   // gallery indices of the truth set
  std::optional<std::size_t> reference;
  bool exclude_reference = false;
};

// Resolves ids against the dump, gallery and vocabulary. Any miss raises
// DataError naming the query. An empty split keeps every triplet.
std::vector<ResolvedTriplet> resolve_triplets(const DataBundle& data, const Gallery& gallery,
                                              const std::string& split = "");

enum class FusionMode { kModel, kAverage, kIdentityOnTarget };

FusionMode fusion_mode_from_string(const std::string& s);
std::string to_string(FusionMode mode);

// Class token of the caption encoder output.
std::vector<float> encode_caption_pooled(FusionModel<float>& model, const TokenIds& ids);

// Query embedding for one triplet under the chosen fusion mode.
std::vector<float> embed_query(FusionModel<float>& model, const ResolvedTriplet& q,
                               const Gallery& gallery, FusionMode mode);

struct EvalOptions {
  std::vector<std::size_t> recall_ks{1, 5, 10, 50};
  std::vector<std::size_t> map_ks{5, 10, 25, 50};
  FusionMode mode = FusionMode::kModel;
  bool keep_queries = true;  // per-query records in the report

  void validate(std::size_t gallery_size) const;
};

EvalReport evaluate(FusionModel<float>& model, std::span<const ResolvedTriplet> queries,
                    const Gallery& gallery, const EvalOptions& options);

}  // namespace compfuse
