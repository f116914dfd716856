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

// Desk-scale stand-in for a speech codec: degrades clean speech with
// signal-dependent noise and synthesizes the per-subframe conditioning
// features the encoder expects. Nothing here claims fidelity to a real codec.

#include <cstdint>
#include <span>
#include <vector>

#include "nolace/encoder.hpp"

namespace nolace {

// Feature slot layout (kFeatureDim = 93 floats per 5 ms subframe).
namespace feature_layout {
inline constexpr int kSpectrumOffset = 0;    // clean log band energies
inline constexpr int kSpectrumBands = 32;
inline constexpr int kCepstrumOffset = 32;   // degraded-signal cepstrum
inline constexpr int kCepstrumCount = 32;
inline constexpr int kPitchCorrOffset = 64;  // degraded autocorrelation at lag-2..lag+2
inline constexpr int kPitchCorrCount = 5;
inline constexpr int kShortCorrOffset = 69;  // degraded autocorrelation at lags 1..20
inline constexpr int kShortCorrCount = 20;
inline constexpr int kLtpOffset = 89;        // 3-tap clean long-term predictor
inline constexpr int kLtpCount = 3;
inline constexpr int kBitrateSlot = 92;      // bitrate / 20 kb/s
inline constexpr int kFeatureDim = 93;
}  // namespace feature_layout

static_assert(feature_layout::kFeatureDim == kDefaultFeatureDim);

struct DegradationProfile {
  float noise_strength = 0.3f;      // shaped Gaussian noise, relative to subframe RMS
  float spectral_tilt = 0.5f;       // one-pole low-pass coefficient of that noise
  float quantization_noise = 0.2f;  // uniform quantizer step, relative to subframe RMS
  int bitrate_kbps = 9;             // 6, 9, 12 or 20

  // Throws ContractViolation for strengths outside [0, 1] or an unknown bitrate.
  void check() const;
  // 1.0 at 6 kb/s down to 0.25 at 20 kb/s.
  float bitrate_factor() const;
};

// Deterministic for a given seed. All strengths zero returns the input.
std::vector<float> degrade(std::span<const float> clean, const DegradationProfile& profile, std::uint64_t seed);

inline constexpr int kPitchWindow = 400;  // 25 ms
inline constexpr float kVoicingThreshold = 0.5f;

struct PitchEstimate {
  int lag = 0;  // 0 when unvoiced
  float correlation = 0.0f;
};

// Normalized autocorrelation over the 25 ms window ending at `end`; samples
// before the start of the signal count as zero.
PitchEstimate estimate_pitch(std::span<const float> signal, std::size_t end);

// One FeatureFrame per 80 samples (a trailing partial subframe is dropped).
std::vector<FeatureFrame> extract_features(std::span<const float> clean, std::span<const float> degraded,
                                           const DegradationProfile& profile);

// Speech-like test signal: voiced harmonic segments with gliding f0,
// unvoiced noise bursts and pauses.
std::vector<float> synthetic_speech(double seconds, std::uint64_t seed);

double snr_db(std::span<const float> clean, std::span<const float> degraded);

}  // namespace nolace
