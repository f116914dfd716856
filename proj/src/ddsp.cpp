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

#include "nolace/ddsp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nolace {
namespace {

bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

Eigen::Map<const Vector> as_vector(std::span<const float> s) {
  return Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size()));
}

void check_phi(int expected, std::span<const float> phi, const char* what) {
  if (static_cast<int>(phi.size()) != expected) {
    throw ContractViolation(std::string(what) + ": feature vector has " +
                            std::to_string(phi.size()) + " entries, expected " +
                            std::to_string(expected));
  }
}

float bounded_gain(float gain_limit, float activation) {
  return std::exp(gain_limit * std::tanh(activation));
}

// Shift `frame` into the tail of `history`, keeping the newest samples.
void push_history(std::vector<float>& history, std::size_t offset, std::size_t length,
                  std::span<const float> frame) {
  if (length == 0) return;
  auto* h = history.data() + offset;
  if (frame.size() >= length) {
    std::copy(frame.end() - static_cast<std::ptrdiff_t>(length), frame.end(), h);
  } else {
    std::copy(h + frame.size(), h + length, h);
    std::copy(frame.begin(), frame.end(), h + (length - frame.size()));
  }
}

float leaky_relu(float x) { return x > 0.0f ? x : kShapeLeakySlope * x; }

}  // namespace

void KernelSpec::check() const {
  NOLACE_REQUIRE(in_ch >= 1 && out_ch >= 1 && taps >= 1, "KernelSpec: channel and tap counts must be >= 1");
  NOLACE_REQUIRE(std::isfinite(gain_limit) && gain_limit > 0.0f, "KernelSpec: gain_limit must be positive and finite");
  NOLACE_REQUIRE(w_shape.rows() == rows() && b_shape.size() == rows(), "KernelSpec: shape tensor rows do not match out_ch * in_ch * taps");
  NOLACE_REQUIRE(w_gain.rows() == out_ch && b_gain.size() == out_ch, "KernelSpec: gain tensor rows do not match out_ch");
  NOLACE_REQUIRE(w_gain.cols() == w_shape.cols(), "KernelSpec: shape and gain feature dims differ");
  NOLACE_REQUIRE(all_finite(w_shape) && b_shape.allFinite() && all_finite(w_gain) && b_gain.allFinite(),
                 "KernelSpec: non-finite parameter");
}

KernelSpec KernelSpec::zeros(int in_ch, int out_ch, int taps, int feature_dim, float gain_limit) {
  KernelSpec spec;
  spec.in_ch = in_ch;
  spec.out_ch = out_ch;
  spec.taps = taps;
  spec.gain_limit = gain_limit;
  spec.w_shape = Matrix::Zero(spec.rows(), feature_dim);
  spec.b_shape = Vector::Zero(spec.rows());
  spec.w_gain = Matrix::Zero(out_ch, feature_dim);
  spec.b_gain = Vector::Zero(out_ch);
  return spec;
}

std::vector<float> compute_kernel_shape(const KernelSpec& spec, std::span<const float> phi) {
  check_phi(spec.feature_dim(), phi, "compute_kernel_shape");
  const Vector raw = spec.w_shape * as_vector(phi) + spec.b_shape;

  std::vector<float> kappa(static_cast<std::size_t>(spec.rows()));
  const int block = spec.in_ch * spec.taps;
  for (int o = 0; o < spec.out_ch; ++o) {
    float denom = 0.0f;
    for (int i = 0; i < spec.in_ch; ++i) {
      denom += raw.segment(o * block + i * spec.taps, spec.taps).norm();
    }
    denom = std::max(denom, kNormFloor);
    for (int k = 0; k < block; ++k) {
      kappa[static_cast<std::size_t>(o * block + k)] = raw[o * block + k] / denom;
    }
  }
  return kappa;
}

std::vector<float> compute_kernel_gain(const KernelSpec& spec, std::span<const float> phi) {
  check_phi(spec.feature_dim(), phi, "compute_kernel_gain");
  const Vector act = spec.w_gain * as_vector(phi) + spec.b_gain;
  std::vector<float> gain(static_cast<std::size_t>(spec.out_ch));
  for (int o = 0; o < spec.out_ch; ++o) gain[static_cast<std::size_t>(o)] = bounded_gain(spec.gain_limit, act[o]);
  return gain;
}

FrameFilter make_frame_filter(const KernelSpec& spec, std::span<const float> phi) {
  FrameFilter f;
  f.in_ch = spec.in_ch;
  f.out_ch = spec.out_ch;
  f.taps = spec.taps;
  f.impulse = compute_kernel_shape(spec, phi);
  f.gain = compute_kernel_gain(spec, phi);
  const std::size_t block = static_cast<std::size_t>(spec.in_ch * spec.taps);
  for (std::size_t k = 0; k < f.impulse.size(); ++k) f.impulse[k] *= f.gain[k / block];
  return f;
}

void apply_frame_filter(const FrameFilter& current, const FrameFilter* previous,
                        std::span<const float> input, int frame_size, std::span<float> output) {
  const int taps = current.taps;
  const int span_per_ch = frame_size + taps - 1;
  NOLACE_REQUIRE(static_cast<int>(input.size()) == current.in_ch * span_per_ch,
                 "apply_frame_filter: input must hold taps - 1 history samples plus one frame per channel");
  NOLACE_REQUIRE(static_cast<int>(output.size()) == current.out_ch * frame_size,
                 "apply_frame_filter: output size mismatch");
  if (previous != nullptr) {
    NOLACE_REQUIRE(previous->in_ch == current.in_ch && previous->out_ch == current.out_ch &&
                       previous->taps == taps,
                   "apply_frame_filter: previous filter has a different layout");
    if (previous->impulse == current.impulse) previous = nullptr;
  }
  const int half = frame_size / 2;

  auto fir = [&](const FrameFilter& f, int o, int t) {
    float acc = 0.0f;
    for (int i = 0; i < f.in_ch; ++i) {
      const float* x = input.data() + i * span_per_ch + (taps - 1) + t;
      const auto h = f.response(o, i);
      for (int tau = 0; tau < taps; ++tau) acc += h[static_cast<std::size_t>(tau)] * x[-tau];
    }
    return acc;
  };

  for (int o = 0; o < current.out_ch; ++o) {
    float* y = output.data() + o * frame_size;
    int t = 0;
    if (previous != nullptr) {
      for (; t < half; ++t) {
        const float w = crossfade_weight(t, frame_size);
        y[t] = (1.0f - w) * fir(*previous, o, t) + w * fir(current, o, t);
      }
    }
    for (; t < frame_size; ++t) y[t] = fir(current, o, t);
  }
}

AdaConvState AdaConvState::for_spec(const KernelSpec& spec) {
  AdaConvState s;
  s.history.assign(static_cast<std::size_t>(spec.in_ch * (spec.taps - 1)), 0.0f);
  return s;
}

void AdaConvState::reset() {
  std::fill(history.begin(), history.end(), 0.0f);
  previous.reset();
}

void adaconv_frame(const KernelSpec& spec, std::span<const float> phi, AdaConvState& state,
                   std::span<const float> input, std::span<float> output) {
  NOLACE_REQUIRE(input.size() % static_cast<std::size_t>(spec.in_ch) == 0, "adaconv_frame: input not divisible by in_ch");
  const int n = static_cast<int>(input.size()) / spec.in_ch;
  const int hist = spec.taps - 1;
  NOLACE_REQUIRE(static_cast<int>(state.history.size()) == spec.in_ch * hist,
                 "adaconv_frame: state history does not hold taps - 1 samples per input channel");
  NOLACE_REQUIRE(static_cast<int>(output.size()) == spec.out_ch * n, "adaconv_frame: output size mismatch");

  FrameFilter current = make_frame_filter(spec, phi);

  std::vector<float> padded(static_cast<std::size_t>(spec.in_ch * (hist + n)));
  for (int i = 0; i < spec.in_ch; ++i) {
    auto* dst = padded.data() + i * (hist + n);
    std::copy_n(state.history.data() + i * hist, hist, dst);
    std::copy_n(input.data() + i * n, n, dst + hist);
  }
  apply_frame_filter(current, state.previous ? &*state.previous : nullptr, padded, n, output);

  for (int i = 0; i < spec.in_ch; ++i) {
    push_history(state.history, static_cast<std::size_t>(i * hist), static_cast<std::size_t>(hist),
                 input.subspan(static_cast<std::size_t>(i * n), static_cast<std::size_t>(n)));
  }
  state.previous = std::move(current);
}

void CombSpec::check() const {
  kernel.check();
  NOLACE_REQUIRE(kernel.in_ch == 1 && kernel.out_ch == 1, "CombSpec: comb kernel must be single channel");
  NOLACE_REQUIRE(w_feedthrough.rows() == 1 && w_feedthrough.cols() == kernel.feature_dim() &&
                     b_feedthrough.size() == 1,
                 "CombSpec: feed-through tensors have wrong shape");
  NOLACE_REQUIRE(w_feedthrough.allFinite() && b_feedthrough.allFinite(), "CombSpec: non-finite parameter");
  NOLACE_REQUIRE(max_lag >= min_lag(), "CombSpec: max_lag below minimum causal lag");
}

CombSpec CombSpec::zeros(int taps, int feature_dim, float gain_limit) {
  CombSpec spec;
  spec.kernel = KernelSpec::zeros(1, 1, taps, feature_dim, gain_limit);
  spec.w_feedthrough = Matrix::Zero(1, feature_dim);
  spec.b_feedthrough = Vector::Zero(1);
  spec.max_lag = kMaxPitchLag + taps / 2;
  return spec;
}

CombFilter make_comb_filter(const CombSpec& spec, std::span<const float> phi, int pitch_lag) {
  if (pitch_lag != 0 && (pitch_lag < spec.min_lag() || pitch_lag > spec.max_lag)) {
    throw ContractViolation("adacomb: pitch lag " + std::to_string(pitch_lag) + " outside [" +
                            std::to_string(spec.min_lag()) + ", " + std::to_string(spec.max_lag) + "]");
  }
  check_phi(spec.kernel.feature_dim(), phi, "adacomb");
  CombFilter f;
  f.lag = pitch_lag;
  f.impulse = compute_kernel_shape(spec.kernel, phi);
  f.gain = compute_kernel_gain(spec.kernel, phi)[0];
  for (auto& h : f.impulse) h *= f.gain;
  const float ff = (spec.w_feedthrough.row(0).dot(as_vector(phi))) + spec.b_feedthrough[0];
  f.feedthrough = bounded_gain(spec.kernel.gain_limit, ff);
  return f;
}

AdaCombState AdaCombState::for_spec(const CombSpec& spec) {
  AdaCombState s;
  s.history.assign(static_cast<std::size_t>(spec.history_length()), 0.0f);
  return s;
}

void AdaCombState::reset() {
  std::fill(history.begin(), history.end(), 0.0f);
  previous.reset();
}

void adacomb_frame(const CombSpec& spec, std::span<const float> phi, int pitch_lag,
                   AdaCombState& state, std::span<const float> input, std::span<float> output) {
  const int hist = spec.history_length();
  NOLACE_REQUIRE(static_cast<int>(state.history.size()) == hist,
                 "adacomb_frame: state history does not cover max_lag + taps");
  NOLACE_REQUIRE(output.size() == input.size(), "adacomb_frame: output size mismatch");
  const int n = static_cast<int>(input.size());

  CombFilter current = make_comb_filter(spec, phi, pitch_lag);
  const CombFilter* previous = state.previous ? &*state.previous : nullptr;
  if (previous != nullptr && *previous == current) previous = nullptr;

  std::vector<float> padded(static_cast<std::size_t>(hist + n));
  std::copy(state.history.begin(), state.history.end(), padded.begin());
  std::copy(input.begin(), input.end(), padded.begin() + hist);

  const int taps = spec.kernel.taps;
  const int center = spec.center();
  auto comb = [&](const CombFilter& f, int t) {
    const float* x = padded.data() + hist + t;
    float acc = f.feedthrough * x[0];
    if (f.lag > 0) {
      const float* base = x - f.lag + center;
      for (int tau = 0; tau < taps; ++tau) acc += f.impulse[static_cast<std::size_t>(tau)] * base[-tau];
    }
    return acc;
  };

  const int half = n / 2;
  int t = 0;
  if (previous != nullptr) {
    for (; t < half; ++t) {
      const float w = crossfade_weight(t, n);
      output[static_cast<std::size_t>(t)] = (1.0f - w) * comb(*previous, t) + w * comb(current, t);
    }
  }
  for (; t < n; ++t) output[static_cast<std::size_t>(t)] = comb(current, t);

  push_history(state.history, 0, static_cast<std::size_t>(hist), input);
  state.previous = std::move(current);
}

TemporalEnvelope temporal_envelope(std::span<const float> frame) {
  NOLACE_REQUIRE(frame.size() % kEnvelopeStride == 0, "temporal_envelope: frame length must be divisible by 4");
  const std::size_t blocks = frame.size() / kEnvelopeStride;
  TemporalEnvelope env;
  env.blocks.resize(blocks);
  env.log_env_centered.resize(blocks);
  float sum = 0.0f;
  for (std::size_t b = 0; b < blocks; ++b) {
    float acc = 0.0f;
    for (int k = 0; k < kEnvelopeStride; ++k) acc += std::abs(frame[b * kEnvelopeStride + static_cast<std::size_t>(k)]);
    env.blocks[b] = acc / static_cast<float>(kEnvelopeStride);
    env.log_env_centered[b] = std::log(env.blocks[b] + kEnvelopeFloor);
    sum += env.log_env_centered[b];
  }
  env.mu = blocks > 0 ? sum / static_cast<float>(blocks) : 0.0f;
  for (auto& v : env.log_env_centered) v -= env.mu;
  return env;
}

void ShapeParams::check() const {
  NOLACE_REQUIRE(frame_size > 0 && frame_size % kEnvelopeStride == 0, "ShapeParams: frame size must be a positive multiple of 4");
  NOLACE_REQUIRE(conv1_prev.rows() == hidden && conv1_prev.cols() == input_dim() &&
                     conv1_cur.rows() == hidden && conv1_cur.cols() == input_dim() &&
                     conv1_bias.size() == hidden,
                 "ShapeParams: first conv has wrong shape");
  NOLACE_REQUIRE(conv2_prev.rows() == frame_size && conv2_prev.cols() == hidden &&
                     conv2_cur.rows() == frame_size && conv2_cur.cols() == hidden &&
                     conv2_bias.size() == frame_size,
                 "ShapeParams: second conv has wrong shape");
  NOLACE_REQUIRE(conv1_prev.allFinite() && conv1_cur.allFinite() && conv1_bias.allFinite() &&
                     conv2_prev.allFinite() && conv2_cur.allFinite() && conv2_bias.allFinite(),
                 "ShapeParams: non-finite parameter");
}

ShapeParams ShapeParams::zeros(int feature_dim, int hidden, int frame_size) {
  ShapeParams p;
  p.feature_dim = feature_dim;
  p.hidden = hidden;
  p.frame_size = frame_size;
  p.conv1_prev = Matrix::Zero(hidden, p.input_dim());
  p.conv1_cur = Matrix::Zero(hidden, p.input_dim());
  p.conv1_bias = Vector::Zero(hidden);
  p.conv2_prev = Matrix::Zero(frame_size, hidden);
  p.conv2_cur = Matrix::Zero(frame_size, hidden);
  p.conv2_bias = Vector::Zero(frame_size);
  return p;
}

AdaShapeState AdaShapeState::for_params(const ShapeParams& params) {
  AdaShapeState s;
  s.previous_input.assign(static_cast<std::size_t>(params.input_dim()), 0.0f);
  s.previous_hidden.assign(static_cast<std::size_t>(params.hidden), 0.0f);
  return s;
}

void AdaShapeState::reset() {
  std::fill(previous_input.begin(), previous_input.end(), 0.0f);
  std::fill(previous_hidden.begin(), previous_hidden.end(), 0.0f);
}

std::vector<float> adashape_gains(const ShapeParams& params, std::span<const float> phi,
                                  AdaShapeState& state, std::span<const float> frame) {
  NOLACE_REQUIRE(static_cast<int>(frame.size()) == params.frame_size, "adashape: frame size mismatch");
  check_phi(params.feature_dim, phi, "adashape");
  NOLACE_REQUIRE(static_cast<int>(state.previous_input.size()) == params.input_dim() &&
                     static_cast<int>(state.previous_hidden.size()) == params.hidden,
                 "adashape: state does not match params");

  const TemporalEnvelope env = temporal_envelope(frame);
  Vector z(params.input_dim());
  const int ne = params.envelope_dim();
  for (int b = 0; b < ne; ++b) z[b] = env.log_env_centered[static_cast<std::size_t>(b)];
  z[ne] = env.mu;
  z.tail(params.feature_dim) = as_vector(phi);

  Vector hidden = params.conv1_prev * as_vector(state.previous_input) + params.conv1_cur * z + params.conv1_bias;
  hidden = hidden.unaryExpr(&leaky_relu);
  const Vector log_gain =
      params.conv2_prev * as_vector(state.previous_hidden) + params.conv2_cur * hidden + params.conv2_bias;

  std::vector<float> gains(static_cast<std::size_t>(params.frame_size));
  for (int t = 0; t < params.frame_size; ++t) gains[static_cast<std::size_t>(t)] = std::exp(log_gain[t]);

  std::copy(z.data(), z.data() + z.size(), state.previous_input.begin());
  std::copy(hidden.data(), hidden.data() + hidden.size(), state.previous_hidden.begin());
  return gains;
}

void adashape_frame(const ShapeParams& params, std::span<const float> phi, AdaShapeState& state,
                    std::span<const float> input, std::span<float> output) {
  NOLACE_REQUIRE(output.size() == input.size(), "adashape_frame: output size mismatch");
  const auto gains = adashape_gains(params, phi, state, input);
  for (std::size_t t = 0; t < input.size(); ++t) output[t] = gains[t] * input[t];
}

void Preemphasis::process(std::span<const float> in, std::span<float> out) {
  NOLACE_REQUIRE(out.size() == in.size(), "preemphasis: output size mismatch");
  for (std::size_t t = 0; t < in.size(); ++t) {
    const float x = in[t];
    out[t] = x - coeff_ * last_input_;
    last_input_ = x;
  }
}

void Deemphasis::process(std::span<const float> in, std::span<float> out) {
  NOLACE_REQUIRE(out.size() == in.size(), "deemphasis: output size mismatch");
  for (std::size_t t = 0; t < in.size(); ++t) {
    last_output_ = in[t] + coeff_ * last_output_;
    out[t] = last_output_;
  }
}

std::vector<float> preemphasis(std::span<const float> signal, float coeff) {
  std::vector<float> out(signal.size());
  Preemphasis(coeff).process(signal, out);
  return out;
}

std::vector<float> deemphasis(std::span<const float> signal, float coeff) {
  std::vector<float> out(signal.size());
  Deemphasis(coeff).process(signal, out);
  return out;
}

}  // namespace nolace
