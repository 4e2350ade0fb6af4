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

#include "compfuse/data.hpp"

#include <fstream>
#include <sstream>

#include "compfuse/errors.hpp"

namespace compfuse {

using ojson = nlohmann::ordered_json;

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 2) throw DataError("vocabulary needs class and pad tokens");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty() || tokens_[i].find_first_of(" \t\n") != std::string::npos) {
      throw DataError("vocabulary token " + std::to_string(i) + " is empty or has whitespace");
    }
    if (!index_.emplace(tokens_[i], i).second) {
      throw DataError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

std::size_t Vocabulary::id_of(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw DataError("unknown vocabulary token '" + token + "'");
  return it->second;
}

TokenIds Vocabulary::encode(const TextInput& text) const {
  if (const auto* ids = std::get_if<TokenIds>(&text)) {
    for (std::size_t id : *ids) {
      if (id >= tokens_.size()) {
        throw DataError("token id " + std::to_string(id) + " outside vocabulary of " +
                        std::to_string(tokens_.size()));
      }
    }
    return *ids;
  }
  TokenIds out;
  std::istringstream words(std::get<std::string>(text));
  std::string w;
  while (words >> w) out.push_back(id_of(w));
  return out;
}

std::string Vocabulary::decode(const TokenIds& ids) const {
  std::string out;
  for (std::size_t id : ids) {
    if (id >= tokens_.size()) throw DataError("token id " + std::to_string(id) + " out of range");
    if (!out.empty()) out += ' ';
    out += tokens_[id];
  }
  return out;
}

ojson Vocabulary::to_json() const { return {{"tokens", tokens_}}; }

Vocabulary Vocabulary::from_json(const ojson& j) {
  if (!j.is_object() || !j.contains("tokens") || !j["tokens"].is_array()) {
    throw DataError("vocabulary: expected an object with a 'tokens' array");
  }
  for (const auto& [key, _] : j.items()) {
    if (key != "tokens") throw DataError("vocabulary: unknown key '" + key + "'");
  }
  try {
    return Vocabulary(j["tokens"].get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("vocabulary: ") + e.what());
  }
}

ojson to_json(const TextInput& text) {
  if (const auto* ids = std::get_if<TokenIds>(&text)) return ojson(*ids);
  return ojson(std::get<std::string>(text));
}

TextInput text_input_from_json(const ojson& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_array()) {
    TokenIds ids;
    for (const auto& e : j) {
      if (!e.is_number_unsigned()) throw DataError(where + ": token ids must be non-negative");
      ids.push_back(e.get<std::size_t>());
    }
    return ids;
  }
  throw DataError(where + ": text must be a string or an array of token ids");
}

ojson to_json(const TrainingTriplet& t) {
  ojson j;
  j["query_id"] = t.query_id;
  j["split"] = t.split;
  j["reference"] = t.reference_id;
  j["visual"] = t.visual_keys;
  j["text"] = to_json(t.q_t);
  j["caption"] = to_json(t.q_c);
  j["target"] = t.target_video_id;
  j["targets"] = t.target_ids;
  j["target_caption"] = to_json(t.target_caption);
  j["exclude_reference"] = t.exclude_reference;
  return j;
}

namespace {

template <typename F>
auto guarded(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": " + e.what());
  }
}

void reject_unknown(const ojson& j, std::initializer_list<const char*> keys,
                    const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) throw DataError(where + ": unknown key '" + key + "'");
  }
}

const ojson& require(const ojson& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw DataError(where + ": missing '" + key + "'");
  return j[key];
}

}  // namespace

TrainingTriplet triplet_from_json(const ojson& j, const std::string& where) {
  if (!j.is_object()) throw DataError(where + ": expected an object");
  reject_unknown(j,
                 {"query_id", "split", "reference", "visual", "text", "caption", "target",
                  "targets", "target_caption", "exclude_reference"},
                 where);
  return guarded(where, [&] {
    TrainingTriplet t;
    t.query_id = require(j, "query_id", where).get<std::string>();
    const std::string at = where + " (query '" + t.query_id + "')";
    t.split = j.value("split", std::string("train"));
    t.reference_id = j.value("reference", std::string());
    t.visual_keys = require(j, "visual", at).get<std::vector<std::string>>();
    if (t.visual_keys.empty()) throw DataError(at + ": empty visual key list");
    t.q_t = text_input_from_json(require(j, "text", at), at);
    t.q_c = text_input_from_json(require(j, "caption", at), at);
    t.target_video_id = require(j, "target", at).get<std::string>();
    if (j.contains("targets")) {
      t.target_ids = j["targets"].get<std::vector<std::string>>();
    } else {
      t.target_ids = {t.target_video_id};
    }
    if (std::find(t.target_ids.begin(), t.target_ids.end(), t.target_video_id) ==
        t.target_ids.end()) {
      throw DataError(at + ": 'targets' does not contain 'target'");
    }
    t.target_caption = j.contains("target_caption")
                           ? text_input_from_json(j["target_caption"], at)
                           : TextInput(std::string());
    t.exclude_reference = j.value("exclude_reference", false);
    if (t.exclude_reference && t.reference_id.empty()) {
      throw DataError(at + ": exclude_reference needs a reference id");
    }
    return t;
  });
}

ojson to_json(const GalleryItem& g) { return {{"id", g.id}, {"frames", g.frame_keys}}; }

GalleryItem gallery_item_from_json(const ojson& j, const std::string& where) {
  if (!j.is_object()) throw DataError(where + ": expected an object");
  reject_unknown(j, {"id", "frames"}, where);
  return guarded(where, [&] {
    GalleryItem g;
    g.id = require(j, "id", where).get<std::string>();
    g.frame_keys = require(j, "frames", where).get<std::vector<std::string>>();
    if (g.frame_keys.empty()) throw DataError(where + ": gallery item '" + g.id + "' has no frames");
    return g;
  });
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw DataError("write failed for " + path.string());
}

namespace {

template <typename F>
void for_each_json_line(const std::filesystem::path& path, F&& f) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(lineno);
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    f(j, where);
  }
}

template <typename T>
void write_json_lines(const std::vector<T>& items, const std::filesystem::path& path) {
  std::string text;
  for (const T& item : items) text += to_json(item).dump() + "\n";
  write_text_file(path, text);
}

}  // namespace

std::vector<TrainingTriplet> read_manifest(const std::filesystem::path& path) {
  std::vector<TrainingTriplet> out;
  std::unordered_map<std::string, std::string> seen;
  for_each_json_line(path, [&](const ojson& j, const std::string& where) {
    out.push_back(triplet_from_json(j, where));
    if (!seen.emplace(out.back().query_id, where).second) {
      throw DataError(where + ": duplicate query id '" + out.back().query_id + "'");
    }
  });
  return out;
}

void write_manifest(const std::vector<TrainingTriplet>& triplets,
                    const std::filesystem::path& path) {
  write_json_lines(triplets, path);
}

std::vector<GalleryItem> read_gallery_items(const std::filesystem::path& path) {
  std::vector<GalleryItem> out;
  for_each_json_line(path, [&](const ojson& j, const std::string& where) {
    out.push_back(gallery_item_from_json(j, where));
  });
  return out;
}

void write_gallery_items(const std::vector<GalleryItem>& items,
                         const std::filesystem::path& path) {
  write_json_lines(items, path);
}

Vocabulary read_vocabulary(const std::filesystem::path& path) {
  ojson j;
  try {
    j = ojson::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.filename().string() + ": " + e.what());
  }
  return Vocabulary::from_json(j);
}

void write_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  write_text_file(path, vocab.to_json().dump(2) + "\n");
}

EmbeddingDump read_raw_embeddings(const std::filesystem::path& path) {
  std::optional<EmbeddingDump> dump;
  for_each_json_line(path, [&](const ojson& j, const std::string& where) {
    if (!j.is_object()) throw DataError(where + ": expected an object");
    reject_unknown(j, {"id", "tokens", "mask"}, where);
    const std::string id = guarded(where, [&] { return require(j, "id", where).get<std::string>(); });
    const std::string at = where + " (id '" + id + "')";
    const auto rows = guarded(at, [&] {
      return require(j, "tokens", at).get<std::vector<std::vector<double>>>();
    });
    if (rows.empty() || rows.front().empty()) throw DataError(at + ": empty token matrix");
    const std::size_t width = rows.front().size();
    MatrixF tokens(rows.size(), width);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != width) {
        throw DimensionMismatchError(at + ": ragged token rows (" + std::to_string(rows[r].size()) +
                                     " vs " + std::to_string(width) + ")");
      }
      for (std::size_t c = 0; c < width; ++c) tokens(r, c) = static_cast<float>(rows[r][c]);
    }
    TokenMask mask(rows.size(), 1);
    if (j.contains("mask")) {
      const auto m = guarded(at, [&] { return j["mask"].get<std::vector<int>>(); });
      if (m.size() != rows.size()) throw DataError(at + ": mask length differs from token count");
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] != 0 && m[i] != 1) throw DataError(at + ": mask entries must be 0 or 1");
        mask[i] = static_cast<std::uint8_t>(m[i]);
      }
    }
    if (!dump) dump.emplace(width);
    dump->add(id, TokenSequence<float>{std::move(tokens), std::move(mask)});
  });
  return dump ? std::move(*dump) : EmbeddingDump();
}

void write_raw_embeddings(const EmbeddingDump& dump, const std::filesystem::path& path) {
  std::string text;
  for (const auto& rec : dump.records()) {
    ojson j;
    j["id"] = rec.id;
    ojson rows = ojson::array();
    for (std::size_t r = 0; r < rec.sequence.length(); ++r) {
      auto row = rec.sequence.tokens.row(r);
      rows.push_back(std::vector<float>(row.begin(), row.end()));
    }
    j["tokens"] = std::move(rows);
    j["mask"] = std::vector<int>(rec.sequence.mask.begin(), rec.sequence.mask.end());
    text += j.dump() + "\n";
  }
  write_text_file(path, text);
}

}  // namespace compfuse
