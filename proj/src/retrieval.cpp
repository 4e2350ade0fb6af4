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

#include "compfuse/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "compfuse/errors.hpp"
#include "compfuse/kernels.hpp"

namespace compfuse {

Gallery::Gallery(std::vector<std::string> ids, MatrixF embeddings)
    : ids_(std::move(ids)), embeddings_(std::move(embeddings)) {
  if (ids_.size() != embeddings_.rows()) {
    throw ShapeError("gallery: " + std::to_string(ids_.size()) + " ids for " +
                     std::to_string(embeddings_.rows()) + " embedding rows");
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw DataError("gallery: duplicate id '" + ids_[i] + "'");
    }
  }
}

std::optional<std::size_t> Gallery::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

RankedResult rank_gallery(std::span<const float> query, const Gallery& gallery, std::size_t k,
                          const std::string& query_id, std::span<const std::size_t> excluded) {
  if (query.size() != gallery.dim()) {
    throw ShapeError("rank_gallery: query width " + std::to_string(query.size()) +
                     " differs from gallery width " + std::to_string(gallery.dim()));
  }
  std::vector<std::uint8_t> skip(gallery.size(), 0);
  for (std::size_t e : excluded) {
    if (e < skip.size()) skip[e] = 1;
  }
  const std::size_t available =
      gallery.size() - static_cast<std::size_t>(std::count(skip.begin(), skip.end(), 1));
  if (k > available) {
    throw UsageError("rank_gallery: k=" + std::to_string(k) + " exceeds " +
                     std::to_string(available) + " rankable gallery items");
  }
  const double qn = std::sqrt(kernels::sum_squares<float>(query));
  if (!(qn > 0.0)) throw NumericError("rank_gallery: query '" + query_id + "' has zero norm");

  std::vector<std::pair<float, std::size_t>> scored;
  scored.reserve(available);
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    if (skip[i]) continue;
    auto row = gallery.row(i);
    const double gn = std::sqrt(kernels::sum_squares<float>(row));
    if (!(gn > 0.0)) {
      throw NumericError("rank_gallery: gallery item '" + gallery.ids()[i] + "' has zero norm");
    }
    const float dot = kernels::dot<float>(query, row);
    scored.emplace_back(static_cast<float>(static_cast<double>(dot) / (qn * gn)), i);
  }
  auto better = [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k),
                    scored.end(), better);
  RankedResult out;
  out.query_id = query_id;
  out.items.reserve(k);
  for (std::size_t r = 0; r < k; ++r) {
    out.items.push_back({scored[r].second, gallery.ids()[scored[r].second], scored[r].first});
  }
  return out;
}

double recall_at_k(std::span<const RankedResult> results,
                   const std::map<std::string, std::string>& truth, std::size_t k) {
  if (results.empty()) return 0.0;
  std::size_t hits = 0;
  for (const RankedResult& r : results) {
    auto it = truth.find(r.query_id);
    if (it == truth.end()) throw DataError("recall_at_k: no target for query '" + r.query_id + "'");
    const std::size_t depth = std::min(k, r.items.size());
    for (std::size_t i = 0; i < depth; ++i) {
      if (r.items[i].id == it->second) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

double map_at_k(std::span<const RankedResult> results,
                const std::map<std::string, std::set<std::string>>& truth, std::size_t k) {
  if (results.empty()) return 0.0;
  double total = 0.0;
  for (const RankedResult& r : results) {
    auto it = truth.find(r.query_id);
    if (it == truth.end() || it->second.empty()) {
      throw DataError("map_at_k: empty truth set for query '" + r.query_id + "'");
    }
    const std::set<std::string>& targets = it->second;
    const std::size_t depth = std::min(k, r.items.size());
    std::size_t hits = 0;
    double precision_sum = 0.0;
    for (std::size_t i = 0; i < depth; ++i) {
      if (targets.contains(r.items[i].id)) {
        ++hits;
        precision_sum += static_cast<double>(hits) / static_cast<double>(i + 1);
      }
    }
    total += precision_sum / static_cast<double>(std::min(k, targets.size()));
  }
  return total / static_cast<double>(results.size());
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["num_queries"] = num_queries;
  for (const auto& [k, v] : recall_at) j["recall@" + std::to_string(k)] = v;
  for (const auto& [k, v] : map_at) j["mAP@" + std::to_string(k)] = v;
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const QueryRecord& q : queries) {
    nlohmann::ordered_json rec;
    rec["query_id"] = q.query_id;
    rec["targets"] = q.targets;
    rec["first_hit_rank"] = q.first_hit ? nlohmann::ordered_json(*q.first_hit)
                                        : nlohmann::ordered_json(nullptr);
    rec["top"] = q.top;
    list.push_back(std::move(rec));
  }
  j["queries"] = std::move(list);
  return j;
}

std::string EvalReport::to_json_string() const { return to_json().dump(2) + "\n"; }

}  // namespace compfuse
