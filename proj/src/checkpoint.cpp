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

#include "compfuse/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "compfuse/data.hpp"
#include "compfuse/errors.hpp"

namespace compfuse {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void floats(std::span<const float> xs) {
    for (float f : xs) u32(std::bit_cast<std::uint32_t>(f));
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::span<const char> bytes) : bytes_(bytes) {}
  std::span<const char> take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw TruncatedPayloadError(std::string("checkpoint truncated while reading ") + what);
    }
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t uint(int width, const char* what) {
    auto s = take(static_cast<std::size_t>(width), what);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    }
    return v;
  }
  std::uint8_t u8(const char* what) { return static_cast<std::uint8_t>(uint(1, what)); }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(uint(4, what)); }
  std::uint64_t u64(const char* what) { return uint(8, what); }
  std::string str(const char* what) {
    const std::uint32_t n = u32(what);
    auto s = take(n, what);
    return {s.begin(), s.end()};
  }
  MatrixF floats(std::size_t rows, std::size_t cols, const char* what) {
    auto s = take(rows * cols * 4, what);
    std::vector<float> data(rows * cols);
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::uint32_t v = 0;
      for (int b = 0; b < 4; ++b) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[4 * i + b])) << (8 * b);
      }
      data[i] = std::bit_cast<float>(v);
    }
    return MatrixF(rows, cols, std::move(data));
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Checkpoint Checkpoint::capture(const FusionModel<float>& model, const TrainState& state,
                               std::uint64_t config_hash) {
  Checkpoint c;
  c.config_hash = config_hash;
  c.model_config = model.config;
  c.state = state;
  c.params = model.store;
  return c;
}

std::string Checkpoint::serialize() const {
  Writer w;
  for (int i = 0; i < 8; ++i) w.u8(static_cast<std::uint8_t>(kMagic[i]));
  w.u32(kVersion);
  w.u64(config_hash);
  w.u32(static_cast<std::uint32_t>(state.stage));
  w.u64(state.epochs_completed);
  w.u64(state.optimizer.step);
  w.str(state.rng.state());
  w.str(to_json(model_config).dump());
  w.str(state.history.dump());
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamTensor<float>& p = params[i];
    w.str(p.name);
    w.u8(p.trainable ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(p.value.rows()));
    w.u32(static_cast<std::uint32_t>(p.value.cols()));
    w.floats(p.value.data());
    const bool moments = i < state.optimizer.m.size() && state.optimizer.m[i].size() != 0;
    w.u8(moments ? 1 : 0);
    if (moments) {
      w.floats(state.optimizer.m[i].data());
      w.floats(state.optimizer.v[i].data());
    }
  }
  return w.take();
}

Checkpoint Checkpoint::parse(std::span<const char> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw CorruptHeaderError("checkpoint: bad magic");
  }
  Reader in(bytes.subspan(8));
  const std::uint32_t version = in.u32("version");
  if (version != kVersion) {
    throw CorruptHeaderError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint c;
  c.config_hash = in.u64("config hash");
  c.state.stage = static_cast<int>(in.u32("stage"));
  c.state.epochs_completed = in.u64("epoch counter");
  c.state.optimizer.step = in.u64("optimizer step");
  try {
    c.state.rng.set_state(in.str("rng state"));
    c.model_config = model_config_from_json(nlohmann::ordered_json::parse(in.str("model config")));
    c.state.history = nlohmann::ordered_json::parse(in.str("history"));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptHeaderError(std::string("checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw CorruptHeaderError(std::string("checkpoint: ") + e.what());
  }
  const std::uint32_t count = in.u32("tensor count");
  for (std::uint32_t t = 0; t < count; ++t) {
    std::string name = in.str("tensor name");
    const bool trainable = in.u8("trainable flag") != 0;
    const std::uint32_t rows = in.u32("rows");
    const std::uint32_t cols = in.u32("cols");
    MatrixF value = in.floats(rows, cols, "tensor values");
    try {
      c.params.add(name, std::move(value), trainable);
    } catch (const UsageError& e) {
      throw DuplicateIdError(std::string("checkpoint: ") + e.what());
    }
    const bool moments = in.u8("moment flag") != 0;
    c.state.optimizer.m.emplace_back();
    c.state.optimizer.v.emplace_back();
    if (moments) {
      c.state.optimizer.m.back() = in.floats(rows, cols, "first moment");
      c.state.optimizer.v.back() = in.floats(rows, cols, "second moment");
    }
  }
  if (!in.done()) throw CorruptHeaderError("checkpoint: trailing bytes");
  return c;
}

FusionModel<float> Checkpoint::restore_model() const {
  FusionModel<float> m = FusionModel<float>::create(model_config, 0);
  if (m.store.size() != params.size()) {
    throw DataError("checkpoint holds " + std::to_string(params.size()) +
                    " tensors, model expects " + std::to_string(m.store.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamTensor<float>& dst = m.store[i];
    const ParamTensor<float>& src = params[i];
    if (dst.name != src.name || dst.value.rows() != src.value.rows() ||
        dst.value.cols() != src.value.cols()) {
      throw DataError("checkpoint tensor '" + src.name + "' " + src.value.shape_string() +
                      " does not match model tensor '" + dst.name + "' " +
                      dst.value.shape_string());
    }
    dst.value = src.value;
    dst.trainable = src.trainable;
  }
  return m;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_text_file(path, ckpt.serialize());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_text_file(path);
  return Checkpoint::parse(bytes);
}

}  // namespace compfuse
