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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "compfuse/data.hpp"
#include "compfuse/datagen.hpp"
#include "compfuse/errors.hpp"

namespace compfuse {
namespace {

SynthSpec small_spec() {
  SynthSpec s;
  s.attributes = 3;
  s.values = 4;
  s.dim = 16;
  s.gallery_size = 48;
  s.triplets = 200;
  s.seed = 3;
  return s;
}

std::string config_message(const SynthSpec& s) {
  try {
    s.validate();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(SynthSpec, ValidationNamesTheViolatedConstraint) {
  SynthSpec s;
  s.dim = 3;
  EXPECT_EQ(config_message(s), "synth spec: d must be >= A (got d=3, A=4)");
  s = SynthSpec{};
  s.gallery_size = 4;
  EXPECT_NE(config_message(s).find("N must be >= Vn"), std::string::npos);
  s = SynthSpec{};
  s.gallery_size = 6 * 6 * 6 * 6 + 1;
  EXPECT_NE(config_message(s).find("Vn^A"), std::string::npos);
  s = SynthSpec{};
  s.values = 1;
  EXPECT_NE(config_message(s).find("Vn must be >= 2"), std::string::npos);
  s = SynthSpec{};
  s.test_fraction = 1.0;
  EXPECT_NE(config_message(s).find("test_fraction"), std::string::npos);
  EXPECT_EQ(config_message(SynthSpec{}), "");
}

TEST(SynthSpec, JsonRoundTripAndStrictKeys) {
  const SynthSpec s = small_spec();
  EXPECT_EQ(SynthSpec::from_json(s.to_json()).to_json(), s.to_json());
  auto j = s.to_json();
  j["bogus"] = 1;
  EXPECT_THROW(SynthSpec::from_json(j), ConfigError);
}

TEST(Datagen, NoiselessFramesEqualAttributeConstruction) {
  SynthSpec spec = small_spec();
  spec.sigma = 0.0;
  const auto data = generate(spec);
  // Orthonormal basis.
  for (std::size_t i = 0; i < data.basis.rows(); ++i) {
    for (std::size_t j = 0; j < data.basis.rows(); ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < spec.dim; ++k) dot += data.basis(i, k) * data.basis(j, k);
      EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-12);
    }
  }
  for (std::size_t o = 0; o < data.objects.size(); ++o) {
    const auto& obj = data.objects[o];
    for (const auto& key : data.gallery_items[o].frame_keys) {
      const auto& frame = data.visual.at(key);
      ASSERT_EQ(frame.length(), spec.attributes + 1);
      for (std::size_t k = 0; k < spec.dim; ++k) {
        double sum = 0.0;
        for (std::size_t a = 0; a < spec.attributes; ++a) {
          const double dir = data.direction(a, obj.attributes[a])[k];
          sum += dir;
          EXPECT_EQ(frame.tokens(a + 1, k), static_cast<float>(dir));
        }
        EXPECT_EQ(frame.tokens(0, k), static_cast<float>(sum));
      }
    }
  }
}

TEST(Datagen, TripletLabelsAreSound) {
  const auto data = generate(small_spec());
  std::map<std::string, const SynthObject*> by_id;
  std::set<std::vector<std::size_t>> attrs;
  for (const auto& o : data.objects) {
    by_id[o.id] = &o;
    EXPECT_TRUE(attrs.insert(o.attributes).second) << "duplicate object " << o.id;
  }
  std::size_t tests = 0;
  for (const auto& t : data.triplets) {
    const auto& src = *by_id.at(t.reference_id);
    const auto& tgt = *by_id.at(t.target_video_id);
    std::size_t differing = 0;
    std::size_t changed = 0;
    for (std::size_t a = 0; a < src.attributes.size(); ++a) {
      if (src.attributes[a] != tgt.attributes[a]) {
        ++differing;
        changed = a;
      }
    }
    ASSERT_EQ(differing, 1u) << t.query_id;
    const std::string expected_text = attribute_token(changed) + " " +
                                      value_token(changed, src.attributes[changed]) + " " +
                                      value_token(changed, tgt.attributes[changed]);
    EXPECT_EQ(std::get<std::string>(t.q_t), expected_text);
    std::ostringstream caption;
    for (std::size_t a = 0; a < tgt.attributes.size(); ++a) {
      caption << (a ? " " : "") << value_token(a, tgt.attributes[a]);
    }
    EXPECT_EQ(std::get<std::string>(t.target_caption), caption.str());
    EXPECT_EQ(t.target_ids, std::vector<std::string>{t.target_video_id});
    EXPECT_EQ(t.visual_keys.front(), t.reference_id + "/f0");
    EXPECT_NO_THROW(data.vocab.encode(t.q_t));
    EXPECT_NO_THROW(data.vocab.encode(t.q_c));
    if (t.split == "test") ++tests;
  }
  EXPECT_EQ(tests, small_spec().test_count());
  EXPECT_EQ(data.triplets.back().split, "test");
  EXPECT_EQ(data.triplets.front().split, "train");
}

TEST(Datagen, SameSeedGivesIdenticalFiles) {
  namespace fs = std::filesystem;
  const auto root = fs::temp_directory_path() / "compfuse_datagen_det";
  fs::remove_all(root);
  write_dataset(generate(small_spec()), root / "a");
  write_dataset(generate(small_spec()), root / "b");
  for (const char* f : {"visual.dump", "gallery.jsonl", "manifest.jsonl", "vocab.json",
                        "synth_spec.json", "visual_raw.jsonl"}) {
    EXPECT_EQ(read_text_file(root / "a" / f), read_text_file(root / "b" / f)) << f;
  }
  SynthSpec other = small_spec();
  other.seed = 4;
  write_dataset(generate(other), root / "c", false);
  EXPECT_NE(read_text_file(root / "a" / "visual.dump"), read_text_file(root / "c" / "visual.dump"));
  EXPECT_FALSE(fs::exists(root / "c" / "visual_raw.jsonl"));
  fs::remove_all(root);
}

TEST(Datagen, UnsatisfiableSpecFailsAfterRetryCap) {
  SynthSpec s;
  s.attributes = 2;
  s.values = 2;
  s.dim = 4;
  s.gallery_size = 2;
  s.triplets = 1;
  EXPECT_THROW(generate(s), DataError);
}

}  // namespace
}  // namespace compfuse
