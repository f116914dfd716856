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

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "../support.hpp"
#include "nolace/codec_sim.hpp"
#include "nolace/ddsp.hpp"

using namespace nolace;
namespace fl = nolace::feature_layout;
using testing::Rng;

namespace {

std::vector<float> harmonic(double f0, double seconds, int harmonics = 8) {
  std::vector<float> x(static_cast<std::size_t>(seconds * kSampleRate));
  for (std::size_t t = 0; t < x.size(); ++t) {
    double v = 0.0;
    for (int h = 1; h <= harmonics && h * f0 < 7500.0; ++h)
      v += std::sin(2.0 * std::numbers::pi * h * f0 * static_cast<double>(t) / kSampleRate + 0.3 * h) / h;
    x[t] = static_cast<float>(0.3 * v);
  }
  return x;
}

// Brute-force normalized autocorrelation argmax, the textbook definition.
int brute_force_lag(const std::vector<float>& x, std::size_t end) {
  double best = -2.0;
  int arg = 0;
  for (int lag = kMinPitchLag; lag <= kMaxPitchLag; ++lag) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t k = end - kPitchWindow; k < end; ++k) {
      ab += static_cast<double>(x[k]) * x[k - static_cast<std::size_t>(lag)];
      aa += static_cast<double>(x[k]) * x[k];
      bb += static_cast<double>(x[k - static_cast<std::size_t>(lag)]) * x[k - static_cast<std::size_t>(lag)];
    }
    const double r = ab / std::sqrt(aa * bb);
    if (r > best + 1e-9) {
      best = r;
      arg = lag;
    }
  }
  return arg;
}

}  // namespace

TEST_SUITE("degrade") {
  TEST_CASE("zero strength returns the input") {
    const auto x = synthetic_speech(1.0, 1);
    DegradationProfile p;
    p.noise_strength = 0.0f;
    p.quantization_noise = 0.0f;
    CHECK(degrade(x, p, 5) == x);
  }

  TEST_CASE("fixed seed reproduces, different seed does not") {
    const auto x = synthetic_speech(0.5, 2);
    const DegradationProfile p;
    CHECK(degrade(x, p, 9) == degrade(x, p, 9));
    CHECK(degrade(x, p, 9) != degrade(x, p, 10));
  }

  TEST_CASE("SNR falls monotonically with noise strength") {
    const auto x = synthetic_speech(2.0, 3);
    for (int bitrate : {6, 9, 12, 20}) {
      DegradationProfile p;
      p.bitrate_kbps = bitrate;
      double last = std::numeric_limits<double>::infinity();
      for (int step = 1; step <= 10; ++step) {
        p.noise_strength = 0.1f * static_cast<float>(step);
        const double snr = snr_db(x, degrade(x, p, 77));
        CHECK(snr < last);
        last = snr;
      }
    }
  }

  TEST_CASE("lower bitrate means more noise") {
    const auto x = synthetic_speech(1.0, 4);
    DegradationProfile p;
    double last = -std::numeric_limits<double>::infinity();
    for (int bitrate : {6, 9, 12, 20}) {
      p.bitrate_kbps = bitrate;
      const double snr = snr_db(x, degrade(x, p, 3));
      CHECK(snr > last);
      last = snr;
    }
  }

  TEST_CASE("profile invariants") {
    DegradationProfile p;
    CHECK_NOTHROW(p.check());
    p.noise_strength = 1.5f;
    CHECK_THROWS_AS(p.check(), ContractViolation);
    p.noise_strength = 0.5f;
    p.bitrate_kbps = 8;
    CHECK_THROWS_AS(p.check(), ContractViolation);
    const std::vector<float> x(100, 0.1f);
    CHECK_THROWS_AS(degrade(x, p, 1), ContractViolation);
  }
}

TEST_SUITE("pitch") {
  TEST_CASE("200 Hz sine gives lag 80") {
    std::vector<float> x(kSampleRate / 2);
    for (std::size_t t = 0; t < x.size(); ++t) x[t] = static_cast<float>(0.5 * std::sin(2.0 * std::numbers::pi * 200.0 * static_cast<double>(t) / kSampleRate));
    for (std::size_t end = 1000; end <= x.size(); end += 640) {
      const auto est = estimate_pitch(x, end);
      CHECK(std::abs(est.lag - 80) <= 1);
      CHECK(est.correlation > 0.9f);
    }
  }

  TEST_CASE("silence is unvoiced") {
    const std::vector<float> x(4000, 0.0f);
    CHECK(estimate_pitch(x, 4000).lag == 0);
  }

  TEST_CASE("white noise is unvoiced with a low correlation peak") {
    Rng rng(5);
    const auto x = testing::uniform(rng, 8000);
    for (std::size_t end = 1000; end <= x.size(); end += 700) {
      const auto est = estimate_pitch(x, end);
      CHECK(est.lag == 0);
      CHECK(est.correlation < kVoicingThreshold);
    }
  }

  TEST_CASE("harmonic signals within one sample of the true period") {
    for (double f0 = 80.0; f0 <= 400.0; f0 += 13.0) {
      const auto x = harmonic(f0, 0.2);
      const double period = kSampleRate / f0;
      const auto est = estimate_pitch(x, x.size());
      INFO("f0 = " << f0);
      CHECK(std::abs(est.lag - period) <= 1.0);
    }
  }

  TEST_CASE("global argmax is the estimate or one of its multiples") {
    for (double f0 : {90.0, 150.0, 210.0, 330.0}) {
      const auto x = harmonic(f0, 0.2);
      const int brute = brute_force_lag(x, x.size());
      const int est = estimate_pitch(x, x.size()).lag;
      REQUIRE(est > 0);
      const int m = static_cast<int>(std::lround(static_cast<double>(brute) / est));
      INFO("f0 = " << f0 << ", brute = " << brute << ", estimate = " << est);
      CHECK(m >= 1);
      CHECK(std::abs(brute - m * est) <= m);
    }
  }
}

TEST_SUITE("features") {
  TEST_CASE("one frame per subframe with the documented layout") {
    const auto x = synthetic_speech(1.0, 6);
    DegradationProfile p;
    p.bitrate_kbps = 12;
    const auto y = degrade(x, p, 1);
    const auto frames = extract_features(x, y, p);
    REQUIRE(frames.size() == x.size() / kFrameSize);
    int voiced = 0;
    for (const auto& f : frames) {
      REQUIRE(f.features.size() == static_cast<std::size_t>(fl::kFeatureDim));
      for (float v : f.features) REQUIRE(std::isfinite(v));
      CHECK(f.features[fl::kBitrateSlot] == doctest::Approx(0.6));
      CHECK((f.pitch_lag == 0 || (f.pitch_lag >= kMinPitchLag && f.pitch_lag <= kMaxPitchLag)));
      if (f.pitch_lag == 0) {
        for (int k = 0; k < fl::kLtpCount; ++k) CHECK(f.features[static_cast<std::size_t>(fl::kLtpOffset + k)] == 0.0f);
      } else {
        ++voiced;
      }
      for (int k = 0; k < fl::kShortCorrCount; ++k) CHECK(std::abs(f.features[static_cast<std::size_t>(fl::kShortCorrOffset + k)]) <= 1.0f + 1e-5f);
    }
    CHECK(voiced > 0);
  }

  TEST_CASE("extraction is deterministic") {
    const auto x = synthetic_speech(0.5, 7);
    const DegradationProfile p;
    const auto y = degrade(x, p, 2);
    CHECK(extract_features(x, y, p) == extract_features(x, y, p));
  }

  TEST_CASE("voiced harmonic input yields positive pitch correlation slots") {
    const auto x = harmonic(160.0, 0.5);
    DegradationProfile p;
    p.noise_strength = 0.1f;
    const auto y = degrade(x, p, 3);
    const auto frames = extract_features(x, y, p);
    const auto& f = frames[40];
    CHECK(std::abs(f.pitch_lag - 100) <= 1);
    CHECK(f.features[static_cast<std::size_t>(fl::kPitchCorrOffset + 2)] > 0.8f);
    CHECK(f.features[static_cast<std::size_t>(fl::kLtpOffset + 1)] > 0.5f);
  }

  TEST_CASE("misaligned signals are rejected") {
    const std::vector<float> a(800, 0.0f), b(720, 0.0f);
    CHECK_THROWS_AS(extract_features(a, b, DegradationProfile{}), ContractViolation);
  }
}

TEST_CASE("synthetic speech is bounded and deterministic") {
  const auto a = synthetic_speech(1.5, 8);
  CHECK(a.size() == static_cast<std::size_t>(1.5 * kSampleRate));
  CHECK(a == synthetic_speech(1.5, 8));
  double energy = 0.0;
  for (float v : a) {
    CHECK(std::abs(v) <= 0.95f);
    energy += static_cast<double>(v) * v;
  }
  CHECK(energy > 0.0);
}
