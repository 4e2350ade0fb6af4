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

#include "compfuse/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "compfuse/errors.hpp"
#include "compfuse/rng.hpp"

namespace compfuse {

using ojson = nlohmann::ordered_json;

void SynthSpec::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("synth spec: " + m); };
  if (attributes == 0) fail("A must be >= 1");
  if (values < 2) fail("Vn must be >= 2 (got Vn=" + std::to_string(values) + ")");
  if (dim < attributes) {
    fail("d must be >= A (got d=" + std::to_string(dim) + ", A=" + std::to_string(attributes) +
         ")");
  }
  if (gallery_size < values) {
    fail("N must be >= Vn (got N=" + std::to_string(gallery_size) +
         ", Vn=" + std::to_string(values) + ")");
  }
  double combos = std::pow(static_cast<double>(values), static_cast<double>(attributes));
  if (static_cast<double>(gallery_size) > combos) {
    fail("N must be <= Vn^A distinct attribute vectors (got N=" + std::to_string(gallery_size) +
         ")");
  }
  if (triplets == 0) fail("T must be >= 1");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail("sigma must be >= 0");
  if (frames == 0) fail("frames must be >= 1");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) fail("test_fraction must be in [0, 1)");
}

std::size_t SynthSpec::test_count() const {
  return static_cast<std::size_t>(std::llround(static_cast<double>(triplets) * test_fraction));
}

ojson SynthSpec::to_json() const {
  return {{"attributes", attributes}, {"values", values},
          {"dim", dim},               {"gallery_size", gallery_size},
          {"triplets", triplets},     {"sigma", sigma},
          {"frames", frames},         {"test_fraction", test_fraction},
          {"seed", seed},             {"exclude_reference", exclude_reference}};
}

SynthSpec SynthSpec::from_json(const ojson& j) {
  if (!j.is_object()) throw ConfigError("synth spec must be an object");
  SynthSpec s;
  const ojson defaults = s.to_json();
  for (const auto& [key, _] : j.items()) {
    if (!defaults.contains(key)) throw ConfigError("synth spec: unknown key '" + key + "'");
  }
  try {
    s.attributes = j.value("attributes", s.attributes);
    s.values = j.value("values", s.values);
    s.dim = j.value("dim", s.dim);
    s.gallery_size = j.value("gallery_size", s.gallery_size);
    s.triplets = j.value("triplets", s.triplets);
    s.sigma = j.value("sigma", s.sigma);
    s.frames = j.value("frames", s.frames);
    s.test_fraction = j.value("test_fraction", s.test_fraction);
    s.seed = j.value("seed", s.seed);
    s.exclude_reference = j.value("exclude_reference", s.exclude_reference);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth spec: ") + e.what());
  }
  return s;
}

std::string attribute_token(std::size_t a) { return "attr" + std::to_string(a); }
std::string value_token(std::size_t a, std::size_t v) {
  return "a" + std::to_string(a) + "v" + std::to_string(v);
}

namespace {

std::string padded(const char* prefix, std::size_t i, std::size_t count) {
  const int width = static_cast<int>(std::to_string(count > 0 ? count - 1 : 0).size());
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width < 4 ? 4 : width, i);
  return buf;
}

// Gram-Schmidt over Gaussian draws when A * Vn <= d, otherwise independent
// unit vectors.
MatrixD make_basis(std::size_t count, std::size_t d, Rng& rng) {
  MatrixD b(count, d);
  const bool orthogonal = count <= d;
  for (std::size_t i = 0; i < count; ++i) {
    auto row = b.row(i);
    for (;;) {
      for (double& x : row) x = rng.normal();
      if (orthogonal) {
        for (int pass = 0; pass < 2; ++pass) {
          for (std::size_t j = 0; j < i; ++j) {
            auto prev = b.row(j);
            double dot = 0.0;
            for (std::size_t k = 0; k < d; ++k) dot += row[k] * prev[k];
            for (std::size_t k = 0; k < d; ++k) row[k] -= dot * prev[k];
          }
        }
      }
      double ss = 0.0;
      for (double x : row) ss += x * x;
      if (ss > 1e-12) {
        const double inv = 1.0 / std::sqrt(ss);
        for (double& x : row) x *= inv;
        break;
      }
    }
  }
  return b;
}

std::string words(const std::vector<std::size_t>& attrs) {
  std::string out;
  for (std::size_t a = 0; a < attrs.size(); ++a) {
    if (a) out += ' ';
    out += value_token(a, attrs[a]);
  }
  return out;
}

}  // namespace

SynthDataset generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t A = spec.attributes;
  const std::size_t Vn = spec.values;
  const std::size_t d = spec.dim;
  const std::size_t N = spec.gallery_size;
  Rng rng(spec.seed);

  SynthDataset out;
  out.spec = spec;
  out.basis = make_basis(A * Vn, d, rng);

  std::map<std::vector<std::size_t>, std::size_t> by_attrs;
  for (std::size_t i = 0; i < N; ++i) {
    std::vector<std::size_t> attrs(A);
    if (i < Vn) {
      attrs.assign(A, i);
    } else {
      do {
        for (auto& v : attrs) v = rng.uniform_index(Vn);
      } while (by_attrs.contains(attrs));
    }
    by_attrs.emplace(attrs, i);
    out.objects.push_back({padded("v", i, N), std::move(attrs)});
  }

  std::vector<std::string> tokens{"[CLS]", "[PAD]"};
  for (std::size_t a = 0; a < A; ++a) tokens.push_back(attribute_token(a));
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t v = 0; v < Vn; ++v) tokens.push_back(value_token(a, v));
  }
  out.vocab = Vocabulary(std::move(tokens));

  out.visual = EmbeddingDump(d);
  for (const SynthObject& obj : out.objects) {
    MatrixD clean(A + 1, d);
    for (std::size_t a = 0; a < A; ++a) {
      auto dir = out.direction(a, obj.attributes[a]);
      for (std::size_t k = 0; k < d; ++k) {
        clean(0, k) += dir[k];
        clean(a + 1, k) = dir[k];
      }
    }
    GalleryItem item{obj.id, {}};
    for (std::size_t f = 0; f < spec.frames; ++f) {
      MatrixF frame(A + 1, d);
      for (std::size_t r = 0; r < A + 1; ++r) {
        for (std::size_t k = 0; k < d; ++k) {
          frame(r, k) = static_cast<float>(clean(r, k) + spec.sigma * rng.normal());
        }
      }
      std::string key = obj.id + "/f" + std::to_string(f);
      out.visual.add(key, TokenSequence<float>::dense(std::move(frame)));
      item.frame_keys.push_back(std::move(key));
    }
    out.gallery_items.push_back(std::move(item));
  }

  const std::size_t n_test = spec.test_count();
  const std::size_t max_attempts = 100 * spec.triplets + 1000;
  std::size_t attempts = 0;
  while (out.triplets.size() < spec.triplets) {
    if (++attempts > max_attempts) {
      throw DataError("synth: no object with modified attributes found after " +
                      std::to_string(max_attempts) + " attempts");
    }
    const std::size_t s = rng.uniform_index(N);
    const std::size_t a = rng.uniform_index(A);
    const SynthObject& src = out.objects[s];
    std::vector<std::size_t> candidates;
    std::vector<std::size_t> swapped = src.attributes;
    for (std::size_t y = 0; y < Vn; ++y) {
      if (y == src.attributes[a]) continue;
      swapped[a] = y;
      if (by_attrs.contains(swapped)) candidates.push_back(y);
    }
    if (candidates.empty()) continue;
    const std::size_t x = src.attributes[a];
    const std::size_t y = candidates[rng.uniform_index(candidates.size())];
    swapped[a] = y;
    const SynthObject& tgt = out.objects[by_attrs.at(swapped)];

    const std::size_t t = out.triplets.size();
    TrainingTriplet trip;
    trip.query_id = padded("q", t, spec.triplets);
    trip.split = t + n_test >= spec.triplets ? "test" : "train";
    trip.reference_id = src.id;
    trip.visual_keys = out.gallery_items[s].frame_keys;
    trip.q_t = attribute_token(a) + " " + value_token(a, x) + " " + value_token(a, y);
    trip.q_c = words(src.attributes);
    trip.target_video_id = tgt.id;
    trip.target_ids = {tgt.id};
    trip.target_caption = words(tgt.attributes);
    trip.exclude_reference = spec.exclude_reference;
    out.triplets.push_back(std::move(trip));
  }
  return out;
}

void write_dataset(const SynthDataset& data, const std::filesystem::path& dir, bool raw) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  write_dump(data.visual, dir / "visual.dump");
  write_gallery_items(data.gallery_items, dir / "gallery.jsonl");
  write_manifest(data.triplets, dir / "manifest.jsonl");
  write_vocabulary(data.vocab, dir / "vocab.json");
  write_text_file(dir / "synth_spec.json", data.spec.to_json().dump(2) + "\n");
  if (raw) write_raw_embeddings(data.visual, dir / "visual_raw.jsonl");
}

}  // namespace compfuse
