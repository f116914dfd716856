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

// LACE / NoLACE signal graphs with streaming state.
//
// The graph runs in the pre-emphasized domain on 20 ms blocks (four 80-sample
// subframes). Output of block k depends only on input and features of blocks
// 0..k, and processing a signal in any number of whole-block chunks with a
// carried StreamState gives bit-identical output.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nolace/config.hpp"
#include "nolace/ddsp.hpp"
#include "nolace/encoder.hpp"
#include "nolace/weights_io.hpp"

namespace nolace {

struct GraphOptions {
  // Use phi(1) in place of phi(2) and phi(3). With this, channel 0 of
  // adaconv1 in NoLACE reproduces the LACE graph built from the same weights.
  bool tie_early_latents = false;
};

// Per-stage outputs of one block, channel by channel (kBlockSize samples each).
struct BlockTrace {
  std::map<std::string, std::vector<std::vector<float>>> stage_outputs;
};

using StageState = std::variant<AdaCombState, AdaConvState, AdaShapeState>;

struct StreamState {
  ModelConfig config;
  EncoderState encoder;
  std::vector<StageState> stages;
  std::int64_t samples_processed = 0;

  // Returns the state to what Model::make_state() produces.
  void reset();
  bool operator==(const StreamState&) const = default;
};

class Model {
 public:
  // Throws ValidationError listing every failure when the weights are unusable.
  static Model from_weights(const ModelWeights& weights);

  const ModelConfig& config() const { return config_; }
  const EncoderWeights& encoder() const { return encoder_; }
  StreamState make_state() const;

  // block: kBlockSize samples; features: kSubframesPerBlock frames.
  void enhance_block(StreamState& state, std::span<const float> block, std::span<const FeatureFrame> features,
                     std::span<float> out, const GraphOptions& options = {}, BlockTrace* trace = nullptr) const;

  // Any whole number of blocks with carried state.
  void enhance(StreamState& state, std::span<const float> signal, std::span<const FeatureFrame> features,
               std::span<float> out, const GraphOptions& options = {}) const;

 private:
  struct Stage {
    StageInfo info;
    std::variant<CombSpec, KernelSpec, ShapeParams> params;
  };

  ModelConfig config_;
  EncoderWeights encoder_;
  std::vector<Stage> stages_;
};

// Fresh state; a trailing partial block is zero-padded and the output
// truncated to the input length. Requires signal.size() == 80 * features.size().
std::vector<float> enhance_stream(const Model& model, std::span<const float> signal,
                                  std::span<const FeatureFrame> features, const GraphOptions& options = {});

struct StageFlops {
  std::string name;
  double mflops = 0.0;  // per second of 16 kHz audio
  std::int64_t parameters = 0;
};

struct FlopReport {
  std::vector<StageFlops> stages;
  double total_mflops = 0.0;
  std::int64_t parameters = 0;
};

// Analytic operation count (multiply and add counted separately,
// nonlinearities as one operation) of everything enhance_block computes.
FlopReport count_flops(const ModelConfig& config);

// Identity filters (AdaConv passes channel 0, AdaComb passes the input,
// AdaShape gains are one). With `encoder_seed`, the encoder and feature
// transforms get random weights, otherwise zeros.
ModelWeights make_identity_weights(const ModelConfig& config, std::optional<std::uint64_t> encoder_seed = {});

// Uniform random weights scaled by 1/sqrt(fan_in).
ModelWeights make_random_weights(const ModelConfig& config, std::uint64_t seed, float scale = 1.0f);

}  // namespace nolace
