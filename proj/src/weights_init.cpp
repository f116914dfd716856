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

#include <algorithm>
#include <cmath>
#include <random>

#include "nolace/model.hpp"

namespace nolace {
namespace {

bool is_encoder_tensor(const std::string& name) {
  return name.rfind("ada", 0) != 0;
}

Tensor zero_tensor(const TensorRequirement& req) {
  Tensor t{req.name, req.shape, {}};
  t.data.assign(t.numel(), 0.0f);
  return t;
}

void fill_random(Tensor& t, int fan_in, float scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  const float bound = scale / std::sqrt(static_cast<float>(std::max(fan_in, 1)));
  for (auto& v : t.data) v = bound * dist(rng);
}

}  // namespace

ModelWeights make_identity_weights(const ModelConfig& config, std::optional<std::uint64_t> encoder_seed) {
  ModelWeights w;
  w.header = make_header(config);
  std::mt19937_64 rng(encoder_seed.value_or(0));
  for (const auto& req : required_tensors(config)) {
    Tensor t = zero_tensor(req);
    if (encoder_seed && is_encoder_tensor(req.name)) fill_random(t, req.fan_in, 1.0f, rng);
    w.tensors.push_back(std::move(t));
  }
  // Each AdaConv routes input channel 0 through a unit tap-0 kernel to every
  // output channel; AdaComb and AdaShape are already identities at zero.
  for (const auto& stage : signal_stages(config.variant)) {
    if (stage.kind != StageKind::Conv) continue;
    Tensor* b = w.find(stage.name + ".b_shape");
    const auto block = static_cast<std::size_t>(stage.in_ch * config.conv_taps);
    for (int o = 0; o < stage.out_ch; ++o) b->data[static_cast<std::size_t>(o) * block] = 1.0f;
  }
  return w;
}

ModelWeights make_random_weights(const ModelConfig& config, std::uint64_t seed, float scale) {
  ModelWeights w;
  w.header = make_header(config);
  std::mt19937_64 rng(seed);
  for (const auto& req : required_tensors(config)) {
    Tensor t = zero_tensor(req);
    // Keep AdaShape log-gains moderate so random models stay well scaled.
    const bool shape_out = req.name.find(".conv2.") != std::string::npos;
    fill_random(t, req.fan_in, shape_out ? 0.25f * scale : scale, rng);
    w.tensors.push_back(std::move(t));
  }
  return w;
}

}  // namespace nolace
