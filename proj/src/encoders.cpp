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

#include "compfuse/encoders.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "compfuse/errors.hpp"

namespace compfuse {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

class Reader {
 public:
  explicit Reader(std::span<const char> bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw TruncatedPayloadError(std::string("embedding dump truncated while reading ") +
                                  what + " at byte " + std::to_string(pos_));
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  std::span<const char> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void EmbeddingDump::add(std::string id, TokenSequence<float> sequence) {
  if (index_.contains(id)) throw DuplicateIdError("duplicate embedding id '" + id + "'");
  try {
    sequence.validate();
  } catch (const Error& e) {
    throw DataError("embedding '" + id + "': " + e.what());
  }
  if (dim_ == 0) dim_ = sequence.dim();
  if (sequence.dim() != dim_) {
    throw DimensionMismatchError("embedding '" + id + "' has width " +
                                 std::to_string(sequence.dim()) + ", dump width is " +
                                 std::to_string(dim_));
  }
  index_.emplace(id, records_.size());
  records_.push_back({std::move(id), std::move(sequence)});
}

const TokenSequence<float>* EmbeddingDump::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &records_[it->second].sequence;
}

const TokenSequence<float>& EmbeddingDump::at(const std::string& id) const {
  const auto* s = find(id);
  if (s == nullptr) throw DataError("embedding id '" + id + "' not found in dump");
  return *s;
}

std::string EmbeddingDump::serialize() const {
  std::string out(kMagic, 8);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(dim_));
  put_u32(out, static_cast<std::uint32_t>(records_.size()));
  for (const Record& r : records_) {
    put_u32(out, static_cast<std::uint32_t>(r.id.size()));
    out += r.id;
    const std::size_t len = r.sequence.length();
    put_u32(out, static_cast<std::uint32_t>(len));
    std::string mask((len + 7) / 8, '\0');
    for (std::size_t i = 0; i < len; ++i) {
      if (r.sequence.mask[i]) mask[i / 8] = static_cast<char>(mask[i / 8] | (1u << (i % 8)));
    }
    out += mask;
    for (float f : r.sequence.tokens.data()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

EmbeddingDump EmbeddingDump::parse(std::span<const char> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw CorruptHeaderError("embedding dump: bad magic");
  }
  Reader in(bytes.subspan(8));
  const std::uint32_t version = in.u32("version");
  if (version != kVersion) {
    throw CorruptHeaderError("embedding dump: unsupported version " + std::to_string(version));
  }
  const std::uint32_t dim = in.u32("dim");
  const std::uint32_t count = in.u32("count");
  if (dim == 0 && count > 0) throw CorruptHeaderError("embedding dump: zero width");
  // Every record needs at least 8 bytes plus one float row.
  if (count > 0 && in.remaining() / (8 + 4ull * dim) < count) {
    throw TruncatedPayloadError("embedding dump: header claims " + std::to_string(count) +
                                " records but only " + std::to_string(in.remaining()) +
                                " bytes follow");
  }
  EmbeddingDump dump(dim);
  for (std::uint32_t r = 0; r < count; ++r) {
    const std::uint32_t id_len = in.u32("id length");
    auto id_bytes = in.take(id_len, "id");
    std::string id(id_bytes.begin(), id_bytes.end());
    const std::uint32_t len = in.u32("token count");
    auto mask_bytes = in.take((static_cast<std::size_t>(len) + 7) / 8, "mask");
    in.need(static_cast<std::size_t>(len) * dim * 4, "token payload");
    TokenMask mask(len);
    for (std::size_t i = 0; i < len; ++i) {
      mask[i] = (static_cast<unsigned char>(mask_bytes[i / 8]) >> (i % 8)) & 1u;
    }
    std::vector<float> data(static_cast<std::size_t>(len) * dim);
    for (float& f : data) f = std::bit_cast<float>(in.u32("token payload"));
    dump.add(std::move(id), TokenSequence<float>{MatrixF(len, dim, std::move(data)), std::move(mask)});
  }
  if (!in.done()) {
    throw CorruptHeaderError("embedding dump: " + std::to_string(in.remaining()) +
                             " trailing bytes after " + std::to_string(count) + " records");
  }
  return dump;
}

EmbeddingDump load_dump(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open embedding dump " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string bytes = ss.str();
  return EmbeddingDump::parse(bytes);
}

void write_dump(const EmbeddingDump& dump, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write embedding dump " + path.string());
  const std::string bytes = dump.serialize();
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <typename T>
TokenSequence<T> encode_video(std::span<const TokenSequence<T>> frames) {
  if (frames.empty()) throw UsageError("encode_video: no frames");
  const std::size_t len = frames.front().length();
  const std::size_t dim = frames.front().dim();
  std::vector<double> acc(len * dim, 0.0);
  TokenMask mask(len, 1);
  for (const auto& f : frames) {
    if (f.length() != len || f.dim() != dim) {
      throw ShapeError("encode_video: frame " + f.tokens.shape_string() +
                       " differs from first frame " + frames.front().tokens.shape_string());
    }
    if (f.mask.size() != len) throw ShapeError("encode_video: frame mask length mismatch");
    auto src = f.tokens.data();
    for (std::size_t i = 0; i < src.size(); ++i) acc[i] += static_cast<double>(src[i]);
    for (std::size_t i = 0; i < len; ++i) mask[i] = mask[i] && f.mask[i];
  }
  Matrix<T> out(len, dim);
  auto dst = out.data();
  const double n = static_cast<double>(frames.size());
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(acc[i] / n);
  TokenSequence<T> seq{std::move(out), std::move(mask)};
  seq.validate();
  return seq;
}

template <typename T>
SurrogateTextEncoderParams make_text_encoder(ParamStore<T>& store, const std::string& prefix,
                                             const BlockDims& dims, std::size_t vocab_size,
                                             std::size_t max_len, Rng& rng) {
  if (vocab_size < 2) throw ConfigError("vocabulary must hold at least the class and pad tokens");
  if (max_len == 0) throw ConfigError("max_len must be positive");
  SurrogateTextEncoderParams p;
  p.vocab_size = vocab_size;
  p.max_len = max_len;
  Matrix<T> tok(vocab_size, dims.dim);
  for (T& v : tok.data()) v = static_cast<T>(rng.truncated_normal(dims.init_std));
  Matrix<T> pos(max_len, dims.dim);
  for (T& v : pos.data()) v = static_cast<T>(rng.truncated_normal(dims.init_std));
  p.token_embedding = store.add(prefix + ".token_embedding", std::move(tok));
  p.position_embedding = store.add(prefix + ".position_embedding", std::move(pos));
  p.block = make_ca_block(store, prefix + ".block", dims, rng);
  return p;
}

std::vector<std::string> text_encoder_param_names(const std::string& prefix) {
  std::vector<std::string> names{prefix + ".token_embedding", prefix + ".position_embedding"};
  for (auto& n : ca_block_param_names(prefix + ".block")) names.push_back(std::move(n));
  return names;
}

template <typename T>
SurrogateTextEncoderParams clone_text_encoder(ParamStore<T>& store,
                                              const SurrogateTextEncoderParams& source,
                                              const std::string& source_prefix,
                                              const std::string& prefix, bool trainable) {
  // Ids are assigned in registration order, so the clone's ids are the
  // source's shifted by a constant.
  const auto source_names = text_encoder_param_names(source_prefix);
  const std::size_t first_source = store.id_of(source_names.front());
  const std::size_t first_clone = store.size();
  for (const auto& name : source_names) {
    const std::size_t id = store.id_of(name);
    if (id - first_source != store.size() - first_clone) {
      throw InternalError("text encoder tensors are not contiguous in the store");
    }
    Matrix<T> copy = store[id].value;
    store.add(prefix + name.substr(source_prefix.size()), std::move(copy), trainable);
  }
  const std::size_t shift = first_clone - first_source;
  SurrogateTextEncoderParams p = source;
  auto move_id = [shift](ParamId& id) { id += shift; };
  move_id(p.token_embedding);
  move_id(p.position_embedding);
  for (AttentionParams* a : {&p.block.self_attn, &p.block.cross_attn}) {
    move_id(a->w_q);
    move_id(a->w_k);
    move_id(a->w_v);
    move_id(a->w_o);
  }
  for (ParamId* id : {&p.block.ffn_in, &p.block.ffn_in_bias, &p.block.ffn_out,
                      &p.block.ffn_out_bias, &p.block.ln1_gain, &p.block.ln1_bias,
                      &p.block.ln2_gain, &p.block.ln2_bias, &p.block.ln3_gain,
                      &p.block.ln3_bias}) {
    move_id(*id);
  }
  return p;
}

template <typename T>
SeqVar<T> surrogate_encode_text(Tape<T>& tape, ParamStore<T>& store,
                                const SurrogateTextEncoderParams& p,
                                std::span<const std::size_t> ids) {
  std::vector<std::size_t> full;
  full.reserve(ids.size() + 1);
  full.push_back(kClsTokenId);
  for (std::size_t id : ids) {
    if (id >= p.vocab_size) {
      throw DataError("token id " + std::to_string(id) + " outside vocabulary of " +
                      std::to_string(p.vocab_size));
    }
    full.push_back(id);
  }
  if (full.size() > p.max_len) {
    throw DataError("text of " + std::to_string(full.size()) +
                    " tokens (with class token) exceeds max_len " + std::to_string(p.max_len));
  }
  std::vector<std::size_t> positions(full.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
  TokenMask mask(full.size());
  for (std::size_t i = 0; i < full.size(); ++i) mask[i] = full[i] != kPadTokenId;
  Var<T> tokens = ops::gather_rows(tape.param(store[p.token_embedding]),
                                   std::span<const std::size_t>(full));
  Var<T> pos = ops::gather_rows(tape.param(store[p.position_embedding]),
                                std::span<const std::size_t>(positions));
  const SeqVar<T> x{ops::add(tokens, pos), std::move(mask)};
  return ca_block_forward(x, x, store, p.block);
}

template <typename T>
TokenSequence<T> surrogate_encode_text_apply(ParamStore<T>& store,
                                             const SurrogateTextEncoderParams& p,
                                             std::span<const std::size_t> ids) {
  Tape<T> tape(false);
  return from_tape(surrogate_encode_text(tape, store, p, ids));
}

#define COMPFUSE_INSTANTIATE(T)                                                              \
  template TokenSequence<T> encode_video(std::span<const TokenSequence<T>>);                 \
  template SurrogateTextEncoderParams make_text_encoder(ParamStore<T>&, const std::string&, \
                                                        const BlockDims&, std::size_t,       \
                                                        std::size_t, Rng&);                  \
  template SurrogateTextEncoderParams clone_text_encoder(                                    \
      ParamStore<T>&, const SurrogateTextEncoderParams&, const std::string&,                 \
      const std::string&, bool);                                                             \
  template SeqVar<T> surrogate_encode_text(Tape<T>&, ParamStore<T>&,                         \
                                           const SurrogateTextEncoderParams&,                \
                                           std::span<const std::size_t>);                    \
  template TokenSequence<T> surrogate_encode_text_apply(                                     \
      ParamStore<T>&, const SurrogateTextEncoderParams&, std::span<const std::size_t>);

COMPFUSE_INSTANTIATE(float)
COMPFUSE_INSTANTIATE(double)
#undef COMPFUSE_INSTANTIATE

}  // namespace compfuse
