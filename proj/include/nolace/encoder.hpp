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

// Feature encoder: per-subframe conditioning features to the latent chain
// phi(1)..phi(K).
//
//   features -> Conv(k=1) -> CPool(k=4, s=4) -> Conv(k=2) -> TConv(k=4, s=4)
//            -> GRU -> phi(1) -> ftrans1 -> phi(2) -> ... -> ftrans5 -> phi(6)
//
// CPool is a strided convolution over the four subframes of a 20 ms block,
// so four subframes form the atomic causal unit. Every convolution is causal
// and zero-padded at stream start. tanh follows each convolution and each
// feature transform.

#include <array>
#include <span>
#include <vector>

#include "nolace/ddsp.hpp"

namespace nolace {

inline constexpr int kDefaultFeatureDim = 93;

struct FeatureFrame {
  std::vector<float> features;
  int pitch_lag = 0;  // samples; 0 marks an unvoiced subframe

  bool operator==(const FeatureFrame&) const = default;
};

// Causal 1-d convolution along the frame axis. taps[k] is an out x in matrix;
// taps.back() acts on the current frame, taps[k] on frame n - (K - 1 - k).
struct Conv1d {
  std::vector<Matrix> taps;
  Vector bias;

  int in_dim() const { return taps.empty() ? 0 : static_cast<int>(taps.front().cols()); }
  int out_dim() const { return static_cast<int>(bias.size()); }
  int kernel() const { return static_cast<int>(taps.size()); }
};

// PyTorch-compatible GRU cell, gate order (r, z, n).
struct GruCell {
  Matrix w_ih;  // 3H x I
  Matrix w_hh;  // 3H x H
  Vector b_ih;
  Vector b_hh;

  int hidden() const { return static_cast<int>(w_hh.cols()); }
};

struct EncoderWeights {
  Conv1d conv1;               // k=1, n_f -> n_r
  Conv1d cpool;               // k=4 over the subframes of one block, n_r -> n_h
  Conv1d conv2;               // k=2 over blocks, n_h -> n_h
  std::array<Matrix, 4> tconv;  // one n_h x n_h matrix per output subframe
  Vector tconv_bias;
  GruCell gru;
  std::vector<Conv1d> ftrans;  // k=2, n_h -> n_h; empty for LACE

  int feature_dim() const { return conv1.in_dim(); }
  int latent_dim() const { return gru.hidden(); }
  void check() const;
};

struct EncoderState {
  std::vector<float> conv2_previous;  // last block's CPool output
  std::vector<float> gru_hidden;
  std::vector<std::vector<float>> ftrans_previous;  // last input of each transform

  static EncoderState for_weights(const EncoderWeights& weights);
  void reset();
  bool operator==(const EncoderState&) const = default;
};

// phi[0] is phi(1); phi.size() == 1 + number of feature transforms.
struct LatentChain {
  std::vector<std::vector<float>> phi;

  bool operator==(const LatentChain&) const = default;
};

// frames.size() must be a multiple of kSubframesPerBlock; a trailing partial
// block has to be zero-padded or buffered by the caller.
//
// The first `bypassed_transforms` feature transforms pass their input through
// unchanged, which ties phi(2)..phi(k+1) to phi(1).
std::vector<LatentChain> encode(const EncoderWeights& weights, std::span<const FeatureFrame> frames,
                                EncoderState& state, int bypassed_transforms = 0);

// One causal width-2 transform applied along a sequence of latent vectors.
// `previous` carries the last input across calls.
std::vector<std::vector<float>> feature_transform(const Conv1d& transform,
                                                  std::span<const std::vector<float>> phi_seq,
                                                  std::vector<float>& previous);

}  // namespace nolace
