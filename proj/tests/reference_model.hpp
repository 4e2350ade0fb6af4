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

// Unbatched 64-bit forward passes written without the library's numerics,
// reading parameters by name. Used as oracles for the block, fusion and
// text-encoder tests.
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "compfuse/param_store.hpp"

namespace ref {

using Mat = std::vector<std::vector<double>>;
using Mask = std::vector<int>;

inline Mat param(const compfuse::ParamStore<double>& store, const std::string& name) {
  const auto& m = store.at(name).value;
  Mat out(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

inline Mat mul(const Mat& a, const Mat& b) {
  Mat c(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b[0].size(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < b.size(); ++k) s += a[i][k] * b[k][j];
      c[i][j] = s;
    }
  }
  return c;
}

inline Mat plus(const Mat& a, const Mat& b) {
  Mat c = a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].size(); ++j) c[i][j] += b[i][j];
  }
  return c;
}

inline Mat plus_row(const Mat& a, const Mat& row) {
  Mat c = a;
  for (auto& r : c) {
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += row[0][j];
  }
  return c;
}

inline Mat layer_norm(const Mat& x, const Mat& gain, const Mat& bias, double eps) {
  Mat y = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double n = static_cast<double>(x[i].size());
    double mean = 0.0;
    for (double v : x[i]) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x[i]) var += (v - mean) * (v - mean);
    var /= n;
    for (std::size_t j = 0; j < x[i].size(); ++j) {
      y[i][j] = (x[i][j] - mean) / std::sqrt(var + eps) * gain[0][j] + bias[0][j];
    }
  }
  return y;
}

inline Mat gelu(const Mat& x) {
  Mat y = x;
  for (auto& r : y) {
    for (double& v : r) v = 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)));
  }
  return y;
}

// Weight matrix per head for each query row, masked keys at exactly zero.
inline std::vector<Mat> attention_weights(const Mat& qp, const Mat& kp, const Mask& mask,
                                          std::size_t heads) {
  const std::size_t d = qp[0].size();
  const std::size_t dh = d / heads;
  std::vector<Mat> out;
  for (std::size_t h = 0; h < heads; ++h) {
    Mat w(qp.size(), std::vector<double>(kp.size(), 0.0));
    for (std::size_t i = 0; i < qp.size(); ++i) {
      std::vector<double> s(kp.size(), -INFINITY);
      double mx = -INFINITY;
      for (std::size_t j = 0; j < kp.size(); ++j) {
        if (!mask[j]) continue;
        double dot = 0.0;
        for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) dot += qp[i][c] * kp[j][c];
        s[j] = dot / std::sqrt(static_cast<double>(dh));
        mx = std::max(mx, s[j]);
      }
      double z = 0.0;
      for (std::size_t j = 0; j < kp.size(); ++j) {
        if (mask[j]) z += std::exp(s[j] - mx);
      }
      for (std::size_t j = 0; j < kp.size(); ++j) {
        w[i][j] = mask[j] ? std::exp(s[j] - mx) / z : 0.0;
      }
    }
    out.push_back(std::move(w));
  }
  return out;
}

inline Mat mha(const Mat& q, const Mat& kv, const Mask& kv_mask,
               const compfuse::ParamStore<double>& store, const std::string& prefix,
               std::size_t heads) {
  const Mat qp = mul(q, param(store, prefix + ".w_q"));
  const Mat kp = mul(kv, param(store, prefix + ".w_k"));
  const Mat vp = mul(kv, param(store, prefix + ".w_v"));
  const std::size_t d = qp[0].size();
  const std::size_t dh = d / heads;
  const auto w = attention_weights(qp, kp, kv_mask, heads);
  Mat cat(q.size(), std::vector<double>(d, 0.0));
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < q.size(); ++i) {
      for (std::size_t j = 0; j < kv.size(); ++j) {
        for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) cat[i][c] += w[h][i][j] * vp[j][c];
      }
    }
  }
  return mul(cat, param(store, prefix + ".w_o"));
}

inline Mat ca_block(const Mat& q, const Mask& q_mask, const Mat& kv, const Mask& kv_mask,
                    const compfuse::ParamStore<double>& store, const std::string& prefix,
                    std::size_t heads, double eps = 1e-5) {
  auto p = [&](const char* n) { return param(store, prefix + "." + n); };
  const Mat x1 = layer_norm(plus(q, mha(q, q, q_mask, store, prefix + ".self", heads)),
                            p("ln1_gain"), p("ln1_bias"), eps);
  const Mat x2 = layer_norm(plus(x1, mha(x1, kv, kv_mask, store, prefix + ".cross", heads)),
                            p("ln2_gain"), p("ln2_bias"), eps);
  const Mat h = gelu(plus_row(mul(x2, p("ffn_in")), p("ffn_in_bias")));
  const Mat f = plus_row(mul(h, p("ffn_out")), p("ffn_out_bias"));
  return layer_norm(plus(x2, f), p("ln3_gain"), p("ln3_bias"), eps);
}

inline Mat text_encoder(const std::vector<std::size_t>& ids,
                        const compfuse::ParamStore<double>& store, const std::string& prefix,
                        std::size_t heads) {
  const Mat table = param(store, prefix + ".token_embedding");
  const Mat pos = param(store, prefix + ".position_embedding");
  Mat x;
  Mask mask;
  std::vector<std::size_t> full{0};
  full.insert(full.end(), ids.begin(), ids.end());
  for (std::size_t i = 0; i < full.size(); ++i) {
    std::vector<double> row = table[full[i]];
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += pos[i][j];
    x.push_back(row);
    mask.push_back(full[i] != 1);
  }
  return ca_block(x, mask, x, mask, store, prefix + ".block", heads);
}

struct Fused {
  std::vector<double> tv;
  std::vector<double> tv_prime;
  std::vector<double> mm;
};

inline Mat concat(const Mat& a, const Mat& b) {
  Mat c = a;
  c.insert(c.end(), b.begin(), b.end());
  return c;
}

inline Fused fuse(const Mat& t, const Mask& tm, const Mat& v, const Mask& vm, const Mat& c,
                  const Mask& cm, const compfuse::ParamStore<double>& store,
                  std::size_t path1_blocks, std::size_t heads, bool use_caption = true) {
  Mat kv = use_caption ? concat(c, v) : v;
  Mask km = vm;
  if (use_caption) {
    km = cm;
    km.insert(km.end(), vm.begin(), vm.end());
  }
  Mat x = t;
  for (std::size_t b = 0; b < path1_blocks; ++b) {
    x = ca_block(x, tm, kv, km, store, "fusion.path1." + std::to_string(b), heads);
  }
  const Mat vt = ca_block(v, vm, t, tm, store, "fusion.path2.vt", heads);
  const Mat y = ca_block(t, tm, vt, vm, store, "fusion.path2.tv", heads);
  Fused f{x[0], y[0], std::vector<double>(x[0].size())};
  for (std::size_t j = 0; j < f.mm.size(); ++j) f.mm[j] = (f.tv[j] + f.tv_prime[j]) / 2.0;
  return f;
}

}  // namespace ref
