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

// Adaptive DSP primitives: AdaConv, AdaComb, AdaShape, and emphasis filters.
//
// All primitives work on frames of `frame_size` samples (80 at 16 kHz) and
// recompute their coefficients once per frame from a latent feature vector.
// Coefficient changes are crossfaded over the first half of each frame.
// Multi-channel signals are passed channel-major: channel c occupies
// samples [c * frame_size, (c + 1) * frame_size).

#include <Eigen/Core>

#include <optional>
#include <span>
#include <vector>

#include "nolace/errors.hpp"

namespace nolace {

using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXf;

inline constexpr int kSampleRate = 16000;
inline constexpr int kFrameSize = 80;
inline constexpr int kSubframesPerBlock = 4;
inline constexpr int kBlockSize = kFrameSize * kSubframesPerBlock;
inline constexpr float kPreemphasis = 0.85f;
inline constexpr float kNormFloor = 1e-6f;
inline constexpr float kEnvelopeFloor = 1e-6f;
inline constexpr int kEnvelopeStride = 4;
inline constexpr int kMinPitchLag = 32;
inline constexpr int kMaxPitchLag = 256;
inline constexpr int kDefaultTaps = 15;
inline constexpr float kDefaultGainLimit = 2.0f;
inline constexpr float kShapeLeakySlope = 0.2f;

// Parameters of one adaptive convolution with in_ch inputs and out_ch outputs.
//
// Row (o * in_ch + i) * taps + tau of w_shape/b_shape produces tap tau of the
// kernel from input channel i to output channel o. Tap tau multiplies
// x(t - tau), so tap 0 is the undelayed sample.
struct KernelSpec {
  int in_ch = 1;
  int out_ch = 1;
  int taps = 1;
  float gain_limit = kDefaultGainLimit;
  Matrix w_shape;
  Vector b_shape;
  Matrix w_gain;  // out_ch x feature_dim
  Vector b_gain;

  int feature_dim() const { return static_cast<int>(w_shape.cols()); }
  int rows() const { return out_ch * in_ch * taps; }

  // Throws ContractViolation when an invariant does not hold.
  void check() const;

  static KernelSpec zeros(int in_ch, int out_ch, int taps, int feature_dim,
                          float gain_limit = kDefaultGainLimit);
};

// Impulse responses h = g * kappa for one frame, laid out like w_shape rows.
struct FrameFilter {
  int in_ch = 0;
  int out_ch = 0;
  int taps = 0;
  std::vector<float> impulse;
  std::vector<float> gain;  // per output channel

  std::span<const float> response(int out, int in) const {
    return std::span<const float>(impulse).subspan(
        static_cast<std::size_t>((out * in_ch + in) * taps), static_cast<std::size_t>(taps));
  }

  bool operator==(const FrameFilter&) const = default;
};

// Jointly normalized kernel shapes: per output channel the L2 norms of the
// in_ch tap arrays sum to one. The joint denominator is floored at kNormFloor,
// so an all-zero response yields an all-zero kernel instead of NaN.
std::vector<float> compute_kernel_shape(const KernelSpec& spec, std::span<const float> phi);

// g = exp(gain_limit * tanh(W_g phi + b_g)), one value per output channel.
std::vector<float> compute_kernel_gain(const KernelSpec& spec, std::span<const float> phi);

FrameFilter make_frame_filter(const KernelSpec& spec, std::span<const float> phi);

// Weight of the current-frame filter at sample t. Rises linearly from 0 at
// t = 0 to 1 at t = frame_size / 2 and stays at 1 for the rest of the frame.
inline float crossfade_weight(int t, int frame_size) {
  const int half = frame_size / 2;
  return t >= half ? 1.0f : static_cast<float>(t) / static_cast<float>(half);
}

// Time-varying FIR over one frame. `input` holds, per input channel,
// taps - 1 history samples followed by frame_size new samples. With a
// previous filter the two filter outputs are crossfaded over the first half
// of the frame, which equals crossfading the impulse responses.
void apply_frame_filter(const FrameFilter& current, const FrameFilter* previous,
                        std::span<const float> input, int frame_size, std::span<float> output);

struct AdaConvState {
  std::vector<float> history;  // in_ch * (taps - 1), oldest sample first
  std::optional<FrameFilter> previous;

  static AdaConvState for_spec(const KernelSpec& spec);
  void reset();
  bool operator==(const AdaConvState&) const = default;
};

// input: in_ch * N samples, output: out_ch * N samples.
void adaconv_frame(const KernelSpec& spec, std::span<const float> phi, AdaConvState& state,
                   std::span<const float> input, std::span<float> output);

// Adaptive comb filter around the pitch lag.
//
//   y(t) = f * x(t) + sum_tau h(tau) * x(t - lag + center - tau)
//
// with h = g * kappa from `kernel` (one channel) and the feed-through gain
// f = exp(gain_limit * tanh(w_feedthrough phi + b_feedthrough)). Lag 0 marks
// an unvoiced frame and disables the comb branch.
struct CombSpec {
  KernelSpec kernel;
  Matrix w_feedthrough;  // 1 x feature_dim
  Vector b_feedthrough;  // 1
  int max_lag = kMaxPitchLag + kDefaultTaps / 2;

  int center() const { return kernel.taps / 2; }
  // Smallest lag for which the comb branch stays causal.
  int min_lag() const { return center() + 1; }
  int history_length() const { return max_lag + kernel.taps; }
  void check() const;

  static CombSpec zeros(int taps, int feature_dim, float gain_limit = kDefaultGainLimit);
};

struct CombFilter {
  std::vector<float> impulse;  // g * kappa
  float gain = 0.0f;
  float feedthrough = 1.0f;
  int lag = 0;

  bool operator==(const CombFilter&) const = default;
};

CombFilter make_comb_filter(const CombSpec& spec, std::span<const float> phi, int pitch_lag);

struct AdaCombState {
  std::vector<float> history;  // history_length() samples, oldest first
  std::optional<CombFilter> previous;

  static AdaCombState for_spec(const CombSpec& spec);
  void reset();
  bool operator==(const AdaCombState&) const = default;
};

void adacomb_frame(const CombSpec& spec, std::span<const float> phi, int pitch_lag,
                   AdaCombState& state, std::span<const float> input, std::span<float> output);

struct TemporalEnvelope {
  std::vector<float> blocks;            // mean |x| over 4-sample blocks
  std::vector<float> log_env_centered;  // log(blocks + floor) - mu
  float mu = 0.0f;
};

TemporalEnvelope temporal_envelope(std::span<const float> frame);

// Two causal width-2 convolutions over the frame axis. The input of the first
// one is [log_env_centered, mu, phi]; the second one emits frame_size
// log-gains. Tensor index 0 of a width-2 kernel acts on the previous frame.
struct ShapeParams {
  int feature_dim = 0;
  int hidden = 0;
  int frame_size = kFrameSize;
  Matrix conv1_prev;  // hidden x input_dim()
  Matrix conv1_cur;
  Vector conv1_bias;
  Matrix conv2_prev;  // frame_size x hidden
  Matrix conv2_cur;
  Vector conv2_bias;

  int envelope_dim() const { return frame_size / kEnvelopeStride; }
  int input_dim() const { return envelope_dim() + 1 + feature_dim; }
  void check() const;

  static ShapeParams zeros(int feature_dim, int hidden, int frame_size = kFrameSize);
};

struct AdaShapeState {
  std::vector<float> previous_input;
  std::vector<float> previous_hidden;

  static AdaShapeState for_params(const ShapeParams& params);
  void reset();
  bool operator==(const AdaShapeState&) const = default;
};

// Per-sample gains alpha(t) for one frame; advances the conv context.
std::vector<float> adashape_gains(const ShapeParams& params, std::span<const float> phi,
                                  AdaShapeState& state, std::span<const float> frame);

void adashape_frame(const ShapeParams& params, std::span<const float> phi, AdaShapeState& state,
                    std::span<const float> input, std::span<float> output);

// y(t) = x(t) - coeff * x(t - 1), carrying x(t - 1) across calls.
class Preemphasis {
 public:
  explicit Preemphasis(float coeff = kPreemphasis) : coeff_(coeff) {}
  void process(std::span<const float> in, std::span<float> out);

 private:
  float coeff_;
  float last_input_ = 0.0f;
};

// y(t) = x(t) + coeff * y(t - 1), the inverse of Preemphasis.
class Deemphasis {
 public:
  explicit Deemphasis(float coeff = kPreemphasis) : coeff_(coeff) {}
  void process(std::span<const float> in, std::span<float> out);

 private:
  float coeff_;
  float last_output_ = 0.0f;
};

std::vector<float> preemphasis(std::span<const float> signal, float coeff = kPreemphasis);
std::vector<float> deemphasis(std::span<const float> signal, float coeff = kPreemphasis);

}  // namespace nolace
