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
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

#include "compfuse/encoders.hpp"

namespace compfuse {

// Token ids, or whitespace-separated vocabulary words.
using TextInput = std::variant<TokenIds, std::string>;

class Vocabulary {
 public:
  Vocabulary() = default;
  // tokens[0] and tokens[1] are the class and pad symbols.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t id_of(const std::string& token) const;
  // DataError on unknown words or out-of-range ids.
  TokenIds encode(const TextInput& text) const;
  std::string decode(const TokenIds& ids) const;

  nlohmann::ordered_json to_json() const;
  static Vocabulary from_json(const nlohmann::ordered_json& j);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct TrainingTriplet {
  std::string query_id;
  std::string split = "train";
  std::string reference_id;              // gallery id of the visual query, may be empty
  std::vector<std::string> visual_keys;  // frame keys into the visual dump
  TextInput q_t;
  TextInput q_c;
  std::string target_video_id;
  std::vector<std::string> target_ids;   // full truth set, contains target_video_id
  TextInput target_caption;
  bool exclude_reference = false;
};

struct GalleryItem {
  std::string id;
  std::vector<std::string> frame_keys;
};

nlohmann::ordered_json to_json(const TextInput& text);
TextInput text_input_from_json(const nlohmann::ordered_json& j, const std::string& where);

nlohmann::ordered_json to_json(const TrainingTriplet& t);
TrainingTriplet triplet_from_json(const nlohmann::ordered_json& j, const std::string& where);
nlohmann::ordered_json to_json(const GalleryItem& g);
GalleryItem gallery_item_from_json(const nlohmann::ordered_json& j, const std::string& where);

// JSON lines. Errors carry the file name and line number.
std::vector<TrainingTriplet> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<TrainingTriplet>& triplets,
                    const std::filesystem::path& path);
std::vector<GalleryItem> read_gallery_items(const std::filesystem::path& path);
void write_gallery_items(const std::vector<GalleryItem>& items,
                         const std::filesystem::path& path);
Vocabulary read_vocabulary(const std::filesystem::path& path);
void write_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);

// One raw embedding per line: {"id", "tokens": [[...]], "mask": [...]}.
// "mask" may be omitted for an all-valid sequence.
EmbeddingDump read_raw_embeddings(const std::filesystem::path& path);
void write_raw_embeddings(const EmbeddingDump& dump, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace compfuse
