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
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "compfuse/data.hpp"
#include "compfuse/encoders.hpp"

namespace compfuse {

struct SynthSpec {
  std::size_t attributes = 4;   // A
  std::size_t values = 6;       // Vn, values per attribute
  std::size_t dim = 32;         // d
  std::size_t gallery_size = 512;
  std::size_t triplets = 4096;
  double sigma = 0.05;
  std::size_t frames = 3;
  double test_fraction = 0.125;
  std::uint64_t seed = 0;
  bool exclude_reference = false;

  // ConfigError naming the violated constraint.
  void validate() const;
  std::size_t test_count() const;

  nlohmann::ordered_json to_json() const;
  static SynthSpec from_json(const nlohmann::ordered_json& j);
};

struct SynthObject {
  std::string id;
  std::vector<std::size_t> attributes;
};

struct SynthDataset {
  SynthSpec spec;
  MatrixD basis;  // row a * Vn + v holds the direction of value v of attribute a
  std::vector<SynthObject> objects;
  EmbeddingDump visual;
  std::vector<GalleryItem> gallery_items;
  std::vector<TrainingTriplet> triplets;
  Vocabulary vocab;

  std::span<const double> direction(std::size_t attribute, std::size_t value) const {
    return basis.row(attribute * spec.values + value);
  }
};

std::string attribute_token(std::size_t a);
std::string value_token(std::size_t a, std::size_t v);

// Same SynthSpec, same bytes. Throws DataError when no swap target can be
// found after bounded retries.
SynthDataset generate(const SynthSpec& spec);

// Writes visual.dump, gallery.jsonl, manifest.jsonl, vocab.json and
// synth_spec.json, plus visual_raw.jsonl when `raw` is set.
void write_dataset(const SynthDataset& data, const std::filesystem::path& dir, bool raw = true);

}  // namespace compfuse
