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

#include "nolace/encoder.hpp"

#include <cmath>
#include <string>

namespace nolace {
namespace {

Eigen::Map<const Vector> as_vector(std::span<const float> s) {
  return Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size()));
}

std::vector<float> to_std(const Vector& v) { return std::vector<float>(v.data(), v.data() + v.size()); }

float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

void check_conv(const Conv1d& c, int kernel, int in, int out, const std::string& name) {
  NOLACE_REQUIRE(c.kernel() == kernel, name + ": wrong kernel width");
  NOLACE_REQUIRE(c.bias.size() == out && c.bias.allFinite(), name + ": bad bias");
  for (const auto& m : c.taps) {
    NOLACE_REQUIRE(m.rows() == out && m.cols() == in, name + ": wrong tap matrix shape");
    NOLACE_REQUIRE(m.allFinite(), name + ": non-finite weight");
  }
}

Vector gru_step(const GruCell& gru, const Vector& x, const Vector& h) {
  const int hd = gru.hidden();
  const Vector gi = gru.w_ih * x + gru.b_ih;
  const Vector gh = gru.w_hh * h + gru.b_hh;
  Vector next(hd);
  for (int k = 0; k < hd; ++k) {
    const float r = sigmoid(gi[k] + gh[k]);
    const float z = sigmoid(gi[hd + k] + gh[hd + k]);
    const float n = std::tanh(gi[2 * hd + k] + r * gh[2 * hd + k]);
    next[k] = (1.0f - z) * n + z * h[k];
  }
  return next;
}

}  // namespace

void EncoderWeights::check() const {
  const int nf = feature_dim();
  const int nr = conv1.out_dim();
  const int nh = latent_dim();
  check_conv(conv1, 1, nf, nr, "conv1");
  check_conv(cpool, kSubframesPerBlock, nr, nh, "cpool");
  check_conv(conv2, 2, nh, nh, "conv2");
  for (const auto& m : tconv) {
    NOLACE_REQUIRE(m.rows() == nh && m.cols() == nh && m.allFinite(), "tconv: bad weight");
  }
  NOLACE_REQUIRE(tconv_bias.size() == nh && tconv_bias.allFinite(), "tconv: bad bias");
  NOLACE_REQUIRE(gru.w_ih.rows() == 3 * nh && gru.w_ih.cols() == nh && gru.w_hh.rows() == 3 * nh &&
                     gru.b_ih.size() == 3 * nh && gru.b_hh.size() == 3 * nh,
                 "gru: wrong shape");
  NOLACE_REQUIRE(gru.w_ih.allFinite() && gru.w_hh.allFinite() && gru.b_ih.allFinite() && gru.b_hh.allFinite(),
                 "gru: non-finite weight");
  for (std::size_t k = 0; k < ftrans.size(); ++k) {
    check_conv(ftrans[k], 2, nh, nh, "ftrans" + std::to_string(k + 1));
  }
}

EncoderState EncoderState::for_weights(const EncoderWeights& weights) {
  EncoderState s;
  const auto nh = static_cast<std::size_t>(weights.latent_dim());
  s.conv2_previous.assign(nh, 0.0f);
  s.gru_hidden.assign(nh, 0.0f);
  s.ftrans_previous.assign(weights.ftrans.size(), std::vector<float>(nh, 0.0f));
  return s;
}

void EncoderState::reset() {
  std::fill(conv2_previous.begin(), conv2_previous.end(), 0.0f);
  std::fill(gru_hidden.begin(), gru_hidden.end(), 0.0f);
  for (auto& p : ftrans_previous) std::fill(p.begin(), p.end(), 0.0f);
}

std::vector<std::vector<float>> feature_transform(const Conv1d& transform,
                                                  std::span<const std::vector<float>> phi_seq,
                                                  std::vector<float>& previous) {
  NOLACE_REQUIRE(transform.kernel() == 2, "feature_transform: kernel width must be 2");
  NOLACE_REQUIRE(static_cast<int>(previous.size()) == transform.in_dim(), "feature_transform: state size mismatch");
  std::vector<std::vector<float>> out;
  out.reserve(phi_seq.size());
  for (const auto& phi : phi_seq) {
    NOLACE_REQUIRE(static_cast<int>(phi.size()) == transform.in_dim(), "feature_transform: dimension mismatch");
    Vector y = transform.taps[0] * as_vector(previous) + transform.taps[1] * as_vector(phi) + transform.bias;
    out.push_back(to_std(y.array().tanh().matrix()));
    previous = phi;
  }
  return out;
}

std::vector<LatentChain> encode(const EncoderWeights& weights, std::span<const FeatureFrame> frames,
                                EncoderState& state, int bypassed_transforms) {
  NOLACE_REQUIRE(frames.size() % kSubframesPerBlock == 0,
                 "encode: frame count must be a multiple of 4 (zero-pad or buffer the trailing block)");
  const int nf = weights.feature_dim();
  const int nh = weights.latent_dim();
  NOLACE_REQUIRE(static_cast<int>(state.gru_hidden.size()) == nh &&
                     state.ftrans_previous.size() == weights.ftrans.size(),
                 "encode: state does not match weights");

  std::vector<LatentChain> chains;
  chains.reserve(frames.size());
  Vector hidden = as_vector(state.gru_hidden);

  for (std::size_t b = 0; b < frames.size(); b += kSubframesPerBlock) {
    Vector pooled = weights.cpool.bias;
    for (int k = 0; k < kSubframesPerBlock; ++k) {
      const auto& f = frames[b + static_cast<std::size_t>(k)].features;
      NOLACE_REQUIRE(static_cast<int>(f.size()) == nf,
                     "encode: feature vector has " + std::to_string(f.size()) + " entries, expected " +
                         std::to_string(nf));
      const Vector reduced = (weights.conv1.taps[0] * as_vector(f) + weights.conv1.bias).array().tanh().matrix();
      pooled.noalias() += weights.cpool.taps[static_cast<std::size_t>(k)] * reduced;
    }
    pooled = pooled.array().tanh().matrix();

    const Vector block = (weights.conv2.taps[0] * as_vector(state.conv2_previous) +
                          weights.conv2.taps[1] * pooled + weights.conv2.bias)
                             .array()
                             .tanh()
                             .matrix();
    std::copy(pooled.data(), pooled.data() + nh, state.conv2_previous.begin());

    for (int k = 0; k < kSubframesPerBlock; ++k) {
      const Vector up = (weights.tconv[static_cast<std::size_t>(k)] * block + weights.tconv_bias).array().tanh().matrix();
      hidden = gru_step(weights.gru, up, hidden);
      LatentChain chain;
      chain.phi.reserve(1 + weights.ftrans.size());
      chain.phi.push_back(to_std(hidden));
      chains.push_back(std::move(chain));
    }
  }
  std::copy(hidden.data(), hidden.data() + nh, state.gru_hidden.begin());

  // Feature transforms run after the GRU over the whole span; each is causal
  // along frames so the split does not change results.
  std::vector<std::vector<float>> seq(chains.size());
  for (std::size_t n = 0; n < chains.size(); ++n) seq[n] = chains[n].phi[0];
  for (std::size_t k = 0; k < weights.ftrans.size(); ++k) {
    if (static_cast<int>(k) < bypassed_transforms) {
      if (!seq.empty()) state.ftrans_previous[k] = seq.back();
    } else {
      seq = feature_transform(weights.ftrans[k], seq, state.ftrans_previous[k]);
    }
    for (std::size_t n = 0; n < chains.size(); ++n) chains[n].phi.push_back(seq[n]);
  }
  return chains;
}

}  // namespace nolace
