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

// Embedding providers.
//
// Pretrained vision/text encoders run out of process; their per-item token
// embeddings arrive as an EmbeddingDump. A small trainable text encoder
// stands in for the query text encoder so the second training stage has
// text parameters to update.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "compfuse/attention.hpp"

namespace compfuse {

// Binary layout (little-endian):
//   "CRDUMP01" | u32 version | u32 dim | u32 count
//   per record: u32 id_len | id bytes (UTF-8) | u32 token_count |
//               ceil(L/8) mask bytes (bit i of byte i/8, LSB first) |
//               L*dim f32 row-major
class EmbeddingDump {
 public:
  static constexpr char kMagic[9] = "CRDUMP01";
  static constexpr std::uint32_t kVersion = 1;

  struct Record {
    std::string id;
    TokenSequence<float> sequence;
  };

  EmbeddingDump() = default;
  explicit EmbeddingDump(std::size_t dim) : dim_(dim) {}

  // Throws DuplicateIdError, DimensionMismatchError or DataError.
  void add(std::string id, TokenSequence<float> sequence);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  bool contains(const std::string& id) const { return index_.contains(id); }
  // nullptr when absent.
  const TokenSequence<float>* find(const std::string& id) const;
  // DataError naming the id when absent.
  const TokenSequence<float>& at(const std::string& id) const;
  const std::vector<Record>& records() const { return records_; }

  std::string serialize() const;
  static EmbeddingDump parse(std::span<const char> bytes);

 private:
  std::size_t dim_ = 0;
  std::vector<Record> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

EmbeddingDump load_dump(const std::filesystem::path& path);
void write_dump(const EmbeddingDump& dump, const std::filesystem::path& path);

// Position-wise mean over frames; the mask is the intersection of the frame
// masks. Frames must share length and width.
template <typename T>
TokenSequence<T> encode_video(std::span<const TokenSequence<T>> frames);

using TokenIds = std::vector<std::size_t>;

inline constexpr std::size_t kClsTokenId = 0;
inline constexpr std::size_t kPadTokenId = 1;

struct SurrogateTextEncoderParams {
  ParamId token_embedding = 0;     // vocab x d
  ParamId position_embedding = 0;  // max_len x d
  CaBlockParams block;             // run with kv = q
  std::size_t vocab_size = 0;
  std::size_t max_len = 0;
};

template <typename T>
SurrogateTextEncoderParams make_text_encoder(ParamStore<T>& store, const std::string& prefix,
                                             const BlockDims& dims, std::size_t vocab_size,
                                             std::size_t max_len, Rng& rng);

// Registers a copy of `source`'s tensors under `prefix` with the given
// trainable flag.
template <typename T>
SurrogateTextEncoderParams clone_text_encoder(ParamStore<T>& store,
                                              const SurrogateTextEncoderParams& source,
                                              const std::string& source_prefix,
                                              const std::string& prefix, bool trainable);

std::vector<std::string> text_encoder_param_names(const std::string& prefix);

// Prepends the class token to `ids`, adds token and position embeddings and
// runs one self-attention block. Padding ids are masked out. Out-of-vocab
// ids or sequences longer than max_len raise DataError.
template <typename T>
SeqVar<T> surrogate_encode_text(Tape<T>& tape, ParamStore<T>& store,
                                const SurrogateTextEncoderParams& p, std::span<const std::size_t> ids);

template <typename T>
TokenSequence<T> surrogate_encode_text_apply(ParamStore<T>& store,
                                             const SurrogateTextEncoderParams& p,
                                             std::span<const std::size_t> ids);

}  // namespace compfuse
