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

#include <algorithm>
#include <cstdint>
#include <span>
#include <random>
#include <vector>

#include "nolace/ddsp.hpp"
#include "nolace/encoder.hpp"

namespace testing {

using Rng = std::mt19937_64;

inline std::vector<float> uniform(Rng& rng, std::size_t n, float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> d(lo, hi);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline void fill(Rng& rng, nolace::Matrix& m, float scale) {
  std::uniform_real_distribution<float> d(-scale, scale);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = d(rng);
}

inline void fill(Rng& rng, nolace::Vector& v, float scale) {
  std::uniform_real_distribution<float> d(-scale, scale);
  for (auto& x : v) x = d(rng);
}

inline nolace::KernelSpec random_kernel(Rng& rng, int in_ch, int out_ch, int taps, int dim, float gain_limit = 2.0f) {
  auto spec = nolace::KernelSpec::zeros(in_ch, out_ch, taps, dim, gain_limit);
  const float s = 1.0f / std::sqrt(static_cast<float>(dim));
  fill(rng, spec.w_shape, s);
  fill(rng, spec.b_shape, s);
  fill(rng, spec.w_gain, s);
  fill(rng, spec.b_gain, s);
  return spec;
}

inline nolace::CombSpec random_comb(Rng& rng, int taps, int dim) {
  auto spec = nolace::CombSpec::zeros(taps, dim);
  spec.kernel = random_kernel(rng, 1, 1, taps, dim);
  const float s = 1.0f / std::sqrt(static_cast<float>(dim));
  fill(rng, spec.w_feedthrough, s);
  fill(rng, spec.b_feedthrough, s);
  return spec;
}

inline nolace::ShapeParams random_shape(Rng& rng, int dim, int hidden) {
  auto p = nolace::ShapeParams::zeros(dim, hidden);
  const float s1 = 1.0f / std::sqrt(2.0f * static_cast<float>(p.input_dim()));
  const float s2 = 0.25f / std::sqrt(2.0f * static_cast<float>(hidden));
  fill(rng, p.conv1_prev, s1);
  fill(rng, p.conv1_cur, s1);
  fill(rng, p.conv1_bias, s1);
  fill(rng, p.conv2_prev, s2);
  fill(rng, p.conv2_cur, s2);
  fill(rng, p.conv2_bias, s2);
  return p;
}

// Random conditioning frames; roughly one in four is unvoiced.
inline std::vector<nolace::FeatureFrame> random_frames(Rng& rng, std::size_t count, int dim = nolace::kDefaultFeatureDim) {
  std::uniform_int_distribution<int> lag(nolace::kMinPitchLag, nolace::kMaxPitchLag);
  std::bernoulli_distribution voiced(0.75);
  std::vector<nolace::FeatureFrame> frames(count);
  for (auto& f : frames) {
    f.features = uniform(rng, static_cast<std::size_t>(dim));
    f.pitch_lag = voiced(rng) ? lag(rng) : 0;
  }
  return frames;
}

// Runs adaconv_frame over consecutive frames with one signal per input channel.
inline std::vector<std::vector<float>> run_adaconv(const nolace::KernelSpec& spec, const std::vector<std::vector<float>>& phis,
                                                   const std::vector<std::vector<float>>& channels) {
  nolace::AdaConvState state = nolace::AdaConvState::for_spec(spec);
  std::vector<std::vector<float>> out(static_cast<std::size_t>(spec.out_ch));
  std::vector<float> in(static_cast<std::size_t>(spec.in_ch * nolace::kFrameSize));
  std::vector<float> y(static_cast<std::size_t>(spec.out_ch * nolace::kFrameSize));
  for (std::size_t f = 0; f < phis.size(); ++f) {
    for (int i = 0; i < spec.in_ch; ++i)
      std::copy_n(channels[static_cast<std::size_t>(i)].begin() + static_cast<long>(f) * nolace::kFrameSize,
                  nolace::kFrameSize, in.begin() + i * nolace::kFrameSize);
    nolace::adaconv_frame(spec, phis[f], state, in, y);
    for (int o = 0; o < spec.out_ch; ++o)
      out[static_cast<std::size_t>(o)].insert(out[static_cast<std::size_t>(o)].end(),
                                              y.begin() + o * nolace::kFrameSize,
                                              y.begin() + (o + 1) * nolace::kFrameSize);
  }
  return out;
}

inline std::vector<float> run_adacomb(const nolace::CombSpec& spec, const std::vector<std::vector<float>>& phis,
                                      const std::vector<int>& lags, const std::vector<float>& x) {
  nolace::AdaCombState state = nolace::AdaCombState::for_spec(spec);
  std::vector<float> out;
  std::vector<float> y(nolace::kFrameSize);
  for (std::size_t f = 0; f < phis.size(); ++f) {
    nolace::adacomb_frame(spec, phis[f], lags[f], state,
                          std::span<const float>(x).subspan(f * nolace::kFrameSize, nolace::kFrameSize), y);
    out.insert(out.end(), y.begin(), y.end());
  }
  return out;
}

}  // namespace testing
