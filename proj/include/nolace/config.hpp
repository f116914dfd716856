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

#pragma once

// Model configuration and the fixed stage layout of the LACE and NoLACE
// signal graphs.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "nolace/ddsp.hpp"
#include "nolace/encoder.hpp"

namespace nolace {

enum class Variant : std::uint32_t { Lace = 0, NoLace = 1 };

std::string_view to_string(Variant v);
// Accepts "lace" / "nolace" (case-insensitive); throws ContractViolation.
Variant parse_variant(std::string_view text);

struct ModelConfig {
  Variant variant = Variant::NoLace;
  int n_f = kDefaultFeatureDim;  // input features per subframe
  int n_r = 96;                  // reduced feature dimension
  int n_h = 256;                 // hidden / latent dimension
  int comb_taps = kDefaultTaps;
  int conv_taps = kDefaultTaps;
  int shape_hidden = kFrameSize;  // AdaShape hidden channels
  int frame_size = kFrameSize;
  float gain_limit = kDefaultGainLimit;

  static ModelConfig nolace() { return ModelConfig{}; }
  static ModelConfig lace() {
    ModelConfig c;
    c.variant = Variant::Lace;
    return c;
  }

  int num_transforms() const { return variant == Variant::NoLace ? 5 : 0; }
  bool is_degenerate() const { return n_f <= 0 || n_r <= 0 || n_h <= 0; }

  bool operator==(const ModelConfig&) const = default;
};

enum class StageKind { Comb, Conv, Shape };

// One box of the signal path. `latent` indexes the latent chain: 0 is phi(1).
// Shape stages act on channel 1 (the second channel) of the signal.
struct StageInfo {
  std::string name;
  StageKind kind;
  int in_ch;
  int out_ch;
  int latent;
};

// NoLACE:  adacomb1(phi1) adacomb2(phi2) adaconv1(phi3, 1->2)
//          adashape1(phi4) adaconv2(phi4, 2->2) adashape2(phi5) adaconv3(phi5, 2->2)
//          adashape3(phi6) adaconv4(phi6, 2->1)
// LACE:    adacomb1(phi1) adacomb2(phi1) adaconv1(phi1, 1->1)
std::vector<StageInfo> signal_stages(Variant variant);

struct TensorRequirement {
  std::string name;
  std::vector<std::uint32_t> shape;
  int fan_in;
};

// Every tensor a model of this configuration needs, in canonical order.
std::vector<TensorRequirement> required_tensors(const ModelConfig& config);

}  // namespace nolace
