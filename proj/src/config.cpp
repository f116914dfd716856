// Copyright 2026 The nolace-engine Authors
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

#include "nolace/config.hpp"

#include <algorithm>
#include <cctype>

namespace nolace {

std::string_view to_string(Variant v) { return v == Variant::Lace ? "lace" : "nolace"; }

Variant parse_variant(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "lace") return Variant::Lace;
  if (lower == "nolace") return Variant::NoLace;
  throw ContractViolation("unknown model variant '" + std::string(text) + "' (expected lace or nolace)");
}

std::vector<StageInfo> signal_stages(Variant variant) {
  if (variant == Variant::Lace) {
    return {
        {"adacomb1", StageKind::Comb, 1, 1, 0},
        {"adacomb2", StageKind::Comb, 1, 1, 0},
        {"adaconv1", StageKind::Conv, 1, 1, 0},
    };
  }
  return {
      {"adacomb1", StageKind::Comb, 1, 1, 0},  {"adacomb2", StageKind::Comb, 1, 1, 1},
      {"adaconv1", StageKind::Conv, 1, 2, 2},  {"adashape1", StageKind::Shape, 2, 2, 3},
      {"adaconv2", StageKind::Conv, 2, 2, 3},  {"adashape2", StageKind::Shape, 2, 2, 4},
      {"adaconv3", StageKind::Conv, 2, 2, 4},  {"adashape3", StageKind::Shape, 2, 2, 5},
      {"adaconv4", StageKind::Conv, 2, 1, 5},
  };
}

std::vector<TensorRequirement> required_tensors(const ModelConfig& c) {
  using U = std::uint32_t;
  const auto nf = static_cast<U>(c.n_f);
  const auto nr = static_cast<U>(c.n_r);
  const auto nh = static_cast<U>(c.n_h);
  std::vector<TensorRequirement> req = {
      {"conv1.w", {nr, nf, 1}, c.n_f},
      {"conv1.b", {nr}, c.n_f},
      {"cpool.w", {nh, nr, 4}, 4 * c.n_r},
      {"cpool.b", {nh}, 4 * c.n_r},
      {"conv2.w", {nh, nh, 2}, 2 * c.n_h},
      {"conv2.b", {nh}, 2 * c.n_h},
      {"tconv.w", {nh, nh, 4}, c.n_h},
      {"tconv.b", {nh}, c.n_h},
      {"gru.w_ih", {3 * nh, nh}, c.n_h},
      {"gru.w_hh", {3 * nh, nh}, c.n_h},
      {"gru.b_ih", {3 * nh}, c.n_h},
      {"gru.b_hh", {3 * nh}, c.n_h},
  };
  for (int k = 1; k <= c.num_transforms(); ++k) {
    const std::string p = "ftrans" + std::to_string(k);
    req.push_back({p + ".w", {nh, nh, 2}, 2 * c.n_h});
    req.push_back({p + ".b", {nh}, 2 * c.n_h});
  }
  for (const auto& stage : signal_stages(c.variant)) {
    const std::string& p = stage.name;
    if (stage.kind == StageKind::Shape) {
      const auto in = static_cast<U>(c.frame_size / kEnvelopeStride + 1 + c.n_h);
      const auto hid = static_cast<U>(c.shape_hidden);
      const auto n = static_cast<U>(c.frame_size);
      req.push_back({p + ".conv1.w", {hid, in, 2}, 2 * static_cast<int>(in)});
      req.push_back({p + ".conv1.b", {hid}, 2 * static_cast<int>(in)});
      req.push_back({p + ".conv2.w", {n, hid, 2}, 2 * c.shape_hidden});
      req.push_back({p + ".conv2.b", {n}, 2 * c.shape_hidden});
      continue;
    }
    const int taps = stage.kind == StageKind::Comb ? c.comb_taps : c.conv_taps;
    const auto rows = static_cast<U>(stage.out_ch * stage.in_ch * taps);
    const auto out = static_cast<U>(stage.out_ch);
    req.push_back({p + ".w_shape", {rows, nh}, c.n_h});
    req.push_back({p + ".b_shape", {rows}, c.n_h});
    req.push_back({p + ".w_gain", {out, nh}, c.n_h});
    req.push_back({p + ".b_gain", {out}, c.n_h});
    if (stage.kind == StageKind::Comb) {
      req.push_back({p + ".w_ff", {1, nh}, c.n_h});
      req.push_back({p + ".b_ff", {1}, c.n_h});
    }
  }
  return req;
}

}  // namespace nolace
