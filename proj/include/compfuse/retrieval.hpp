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
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "compfuse/matrix.hpp"

namespace compfuse {

class Gallery {
 public:
  Gallery() = default;
  // Throws DataError on duplicate ids and ShapeError when ids and rows
  // disagree.
  Gallery(std::vector<std::string> ids, MatrixF embeddings);

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return embeddings_.cols(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const MatrixF& embeddings() const { return embeddings_; }
  std::span<const float> row(std::size_t i) const { return embeddings_.row(i); }
  std::optional<std::size_t> index_of(const std::string& id) const;

 private:
  std::vector<std::string> ids_;
  MatrixF embeddings_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct RankedItem {
  std::size_t index = 0;
  std::string id;
  float score = 0.0f;
};

struct RankedResult {
  std::string query_id;
  std::vector<RankedItem> items;  // descending score, ties by ascending index
};

// Top-k gallery items by cosine similarity. Scores are a 32-bit dot product
// divided by norms accumulated in 64 bits. Indices in `excluded` are skipped.
// Zero-norm query or gallery rows raise NumericError naming the offender.
RankedResult rank_gallery(std::span<const float> query, const Gallery& gallery, std::size_t k,
                          const std::string& query_id = "",
                          std::span<const std::size_t> excluded = {});

// Fraction of queries whose target id is in the top k. Missing truth entries
// raise DataError.
double recall_at_k(std::span<const RankedResult> results,
                   const std::map<std::string, std::string>& truth, std::size_t k);

// Mean over queries of (1 / min(k, |truth|)) * sum over hit ranks i <= k of
// precision@i. Empty or missing truth sets raise DataError.
double map_at_k(std::span<const RankedResult> results,
                const std::map<std::string, std::set<std::string>>& truth, std::size_t k);

struct QueryRecord {
  std::string query_id;
  std::vector<std::string> targets;
  std::vector<std::string> top;            // top max(K) ids
  std::optional<std::size_t> first_hit;    // 1-based rank of first target
};

struct EvalReport {
  std::size_t num_queries = 0;
  std::map<std::size_t, double> recall_at;
  std::map<std::size_t, double> map_at;
  std::vector<QueryRecord> queries;

  // Keys "recall@K" and "mAP@K" plus "num_queries" and "queries".
  nlohmann::ordered_json to_json() const;
  std::string to_json_string() const;
};

}  // namespace compfuse
