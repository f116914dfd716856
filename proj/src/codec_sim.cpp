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

#include "nolace/codec_sim.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>

namespace nolace {
namespace {

namespace fl = feature_layout;

constexpr int kSpectrumWindow = 2 * kFrameSize;
constexpr float kLogFloor = 1e-10f;

float subframe_rms(std::span<const float> x) {
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * v;
  return x.empty() ? 0.0f : static_cast<float>(std::sqrt(acc / static_cast<double>(x.size())));
}

// Window of `length` samples ending at `end`, zero before the signal start.
std::vector<float> window_ending_at(std::span<const float> x, std::size_t end, std::size_t length) {
  std::vector<float> w(length, 0.0f);
  for (std::size_t k = 0; k < length; ++k) {
    const auto idx = static_cast<std::ptrdiff_t>(end) - static_cast<std::ptrdiff_t>(length) + static_cast<std::ptrdiff_t>(k);
    if (idx >= 0 && static_cast<std::size_t>(idx) < x.size()) w[k] = x[static_cast<std::size_t>(idx)];
  }
  return w;
}

float normalized_correlation(std::span<const float> a, std::span<const float> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += static_cast<double>(a[k]) * b[k];
    aa += static_cast<double>(a[k]) * a[k];
    bb += static_cast<double>(b[k]) * b[k];
  }
  const double denom = std::sqrt(aa * bb);
  return denom > 1e-12 ? static_cast<float>(ab / denom) : 0.0f;
}

// Real FFT of a fixed size via FFTW. Planning is serialized because the FFTW
// planner is not thread-safe; execution on private buffers is.
class RealFft {
 public:
  explicit RealFft(int size) : size_(size) {
    in_ = fftwf_alloc_real(static_cast<std::size_t>(size));
    out_ = fftwf_alloc_complex(static_cast<std::size_t>(size / 2 + 1));
    static std::mutex planner_mutex;
    std::lock_guard lock(planner_mutex);
    plan_ = fftwf_plan_dft_r2c_1d(size, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      static std::mutex destroy_mutex;
      std::lock_guard lock(destroy_mutex);
      fftwf_destroy_plan(plan_);
    }
    fftwf_free(in_);
    fftwf_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  // Power spectrum |X(k)|^2 for k = 0..size/2.
  std::vector<float> power(std::span<const float> frame) {
    std::copy(frame.begin(), frame.end(), in_);
    fftwf_execute(plan_);
    std::vector<float> p(static_cast<std::size_t>(size_ / 2 + 1));
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
    return p;
  }

 private:
  int size_;
  float* in_ = nullptr;
  fftwf_complex* out_ = nullptr;
  fftwf_plan plan_ = nullptr;
};

std::vector<float> hann(int n) {
  std::vector<float> w(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) w[static_cast<std::size_t>(k)] = 0.5f - 0.5f * std::cos(2.0f * std::numbers::pi_v<float> * (k + 0.5f) / n);
  return w;
}

// Log energies of kSpectrumBands uniform bands over bins 1..size/2.
std::vector<float> log_band_energies(RealFft& fft, const std::vector<float>& window, std::span<const float> x,
                                     std::size_t end) {
  auto frame = window_ending_at(x, end, kSpectrumWindow);
  for (std::size_t k = 0; k < frame.size(); ++k) frame[k] *= window[k];
  const auto p = fft.power(frame);
  const int bins = kSpectrumWindow / 2;
  std::vector<float> bands(fl::kSpectrumBands);
  for (int b = 0; b < fl::kSpectrumBands; ++b) {
    const int lo = 1 + b * bins / fl::kSpectrumBands;
    const int hi = 1 + (b + 1) * bins / fl::kSpectrumBands;
    float e = 0.0f;
    for (int k = lo; k < hi; ++k) e += p[static_cast<std::size_t>(k)];
    bands[static_cast<std::size_t>(b)] = std::log(e + kLogFloor);
  }
  return bands;
}

// Orthonormal DCT-II.
std::vector<float> dct(std::span<const float> v) {
  const auto n = v.size();
  std::vector<float> c(n);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += v[j] * std::cos(std::numbers::pi * (j + 0.5) * k / static_cast<double>(n));
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    c[k] = static_cast<float>(acc * scale);
  }
  return c;
}

float sample_at(std::span<const float> x, std::ptrdiff_t idx) {
  return idx >= 0 && static_cast<std::size_t>(idx) < x.size() ? x[static_cast<std::size_t>(idx)] : 0.0f;
}

// Least-squares 3-tap predictor of x(t) from x(t - lag + 1 .. t - lag - 1).
std::array<float, 3> ltp_coefficients(std::span<const float> x, std::size_t start, int lag) {
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  for (std::size_t t = start; t < start + kFrameSize; ++t) {
    Eigen::Vector3d u;
    for (int j = 0; j < 3; ++j) u[j] = sample_at(x, static_cast<std::ptrdiff_t>(t) - lag + 1 - j);
    a += u * u.transpose();
    b += u * static_cast<double>(sample_at(x, static_cast<std::ptrdiff_t>(t)));
  }
  a.diagonal().array() += 1e-6 * (a.trace() + 1e-9);
  const Eigen::Vector3d c = a.ldlt().solve(b);
  return {static_cast<float>(c[0]), static_cast<float>(c[1]), static_cast<float>(c[2])};
}

}  // namespace

void DegradationProfile::check() const {
  auto unit = [](float v) { return std::isfinite(v) && v >= 0.0f && v <= 1.0f; };
  NOLACE_REQUIRE(unit(noise_strength) && unit(spectral_tilt) && unit(quantization_noise),
                 "DegradationProfile: strengths must lie in [0, 1]");
  NOLACE_REQUIRE(bitrate_kbps == 6 || bitrate_kbps == 9 || bitrate_kbps == 12 || bitrate_kbps == 20,
                 "DegradationProfile: bitrate must be 6, 9, 12 or 20 kb/s");
}

float DegradationProfile::bitrate_factor() const {
  switch (bitrate_kbps) {
    case 6: return 1.0f;
    case 9: return 0.7f;
    case 12: return 0.5f;
    default: return 0.25f;
  }
}

std::vector<float> degrade(std::span<const float> clean, const DegradationProfile& profile, std::uint64_t seed) {
  profile.check();
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  const float norm = std::sqrt(1.0f - profile.spectral_tilt * profile.spectral_tilt + 1e-12f);

  std::vector<float> y(clean.begin(), clean.end());
  float shaped = 0.0f;
  for (std::size_t start = 0; start < clean.size(); start += kFrameSize) {
    const std::size_t len = std::min<std::size_t>(kFrameSize, clean.size() - start);
    const float rms = subframe_rms(clean.subspan(start, len));
    const float noise_gain = profile.noise_strength * profile.bitrate_factor() * rms;
    const float step = 2.0f * profile.quantization_noise * profile.bitrate_factor() * rms;
    for (std::size_t t = start; t < start + len; ++t) {
      shaped = profile.spectral_tilt * shaped + gauss(rng);
      float noise = noise_gain * norm * shaped;
      if (step > 0.0f) noise += step * std::round(clean[t] / step) - clean[t];
      y[t] += noise;
    }
  }
  return y;
}

PitchEstimate estimate_pitch(std::span<const float> signal, std::size_t end) {
  const auto current = window_ending_at(signal, end, kPitchWindow);
  double energy = 0.0;
  for (float v : current) energy += static_cast<double>(v) * v;
  if (energy < 1e-8) return {};

  std::vector<float> r(kMaxPitchLag + 2, -1.0f);
  for (int lag = kMinPitchLag; lag <= kMaxPitchLag; ++lag) {
    const auto delayed = window_ending_at(signal, end >= static_cast<std::size_t>(lag) ? end - static_cast<std::size_t>(lag) : 0,
                                          kPitchWindow);
    if (end < static_cast<std::size_t>(lag)) continue;
    r[static_cast<std::size_t>(lag)] = normalized_correlation(current, delayed);
  }
  const float best = *std::max_element(r.begin() + kMinPitchLag, r.begin() + kMaxPitchLag + 1);
  if (best < kVoicingThreshold) return {0, best};

  // Prefer the shortest strong local maximum to avoid picking a multiple of
  // the period.
  for (int lag = kMinPitchLag; lag <= kMaxPitchLag; ++lag) {
    const float v = r[static_cast<std::size_t>(lag)];
    const float left = lag > kMinPitchLag ? r[static_cast<std::size_t>(lag - 1)] : -1.0f;
    const float right = lag < kMaxPitchLag ? r[static_cast<std::size_t>(lag + 1)] : -1.0f;
    if (v >= left && v >= right && v >= 0.85f * best) return {lag, v};
  }
  return {0, best};
}

std::vector<FeatureFrame> extract_features(std::span<const float> clean, std::span<const float> degraded,
                                           const DegradationProfile& profile) {
  NOLACE_REQUIRE(clean.size() == degraded.size(), "extract_features: clean and degraded signals must be aligned");
  profile.check();
  const std::size_t frames = clean.size() / kFrameSize;
  RealFft fft(kSpectrumWindow);
  const auto window = hann(kSpectrumWindow);

  std::vector<FeatureFrame> out;
  out.reserve(frames);
  for (std::size_t n = 0; n < frames; ++n) {
    const std::size_t start = n * kFrameSize;
    const std::size_t end = start + kFrameSize;
    FeatureFrame f;
    f.features.assign(fl::kFeatureDim, 0.0f);
    f.pitch_lag = estimate_pitch(clean, end).lag;

    const auto spectrum = log_band_energies(fft, window, clean, end);
    std::copy(spectrum.begin(), spectrum.end(), f.features.begin() + fl::kSpectrumOffset);

    const auto noisy_cepstrum = dct(log_band_energies(fft, window, degraded, end));
    std::copy(noisy_cepstrum.begin(), noisy_cepstrum.end(), f.features.begin() + fl::kCepstrumOffset);

    const auto current = window_ending_at(degraded, end, kFrameSize);
    if (f.pitch_lag > 0) {
      for (int d = -2; d <= 2; ++d) {
        const auto lagged = window_ending_at(degraded, end - static_cast<std::size_t>(f.pitch_lag + d), kFrameSize);
        f.features[static_cast<std::size_t>(fl::kPitchCorrOffset + d + 2)] = normalized_correlation(current, lagged);
      }
      const auto ltp = ltp_coefficients(clean, start, f.pitch_lag);
      std::copy(ltp.begin(), ltp.end(), f.features.begin() + fl::kLtpOffset);
    }

    const auto wide = window_ending_at(degraded, end, kSpectrumWindow);
    double r0 = 0.0;
    for (float v : wide) r0 += static_cast<double>(v) * v;
    if (r0 > 1e-12) {
      for (int lag = 1; lag <= fl::kShortCorrCount; ++lag) {
        double acc = 0.0;
        for (std::size_t t = static_cast<std::size_t>(lag); t < wide.size(); ++t) acc += static_cast<double>(wide[t]) * wide[t - static_cast<std::size_t>(lag)];
        f.features[static_cast<std::size_t>(fl::kShortCorrOffset + lag - 1)] = static_cast<float>(acc / r0);
      }
    }
    f.features[fl::kBitrateSlot] = static_cast<float>(profile.bitrate_kbps) / 20.0f;
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<float> synthetic_speech(double seconds, std::uint64_t seed) {
  const auto total = static_cast<std::size_t>(std::llround(seconds * kSampleRate));
  std::vector<float> x(total, 0.0f);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  std::size_t pos = 0;
  double phase = 0.0;
  while (pos < total) {
    const auto len = std::min<std::size_t>(total - pos, static_cast<std::size_t>(kSampleRate * (0.08 + 0.2 * uni(rng))));
    const double kind = uni(rng);
    const double amp = 0.15 + 0.3 * uni(rng);
    if (kind < 0.65) {
      const double f_start = 90.0 + 200.0 * uni(rng);
      const double f_end = std::clamp(f_start * (0.8 + 0.4 * uni(rng)), 80.0, 320.0);
      const double formant1 = 400.0 + 500.0 * uni(rng);
      const double formant2 = 1200.0 + 1200.0 * uni(rng);
      for (std::size_t k = 0; k < len; ++k) {
        const double frac = static_cast<double>(k) / static_cast<double>(len);
        const double f0 = f_start + (f_end - f_start) * frac;
        phase += kTwoPi * f0 / kSampleRate;
        double v = 0.0;
        for (int h = 1; h * f0 < 7000.0; ++h) {
          const double fh = h * f0;
          const double env = 1.0 / h + 0.8 * std::exp(-std::pow((fh - formant1) / 150.0, 2)) +
                             0.4 * std::exp(-std::pow((fh - formant2) / 250.0, 2));
          v += env * std::sin(h * phase);
        }
        const double ramp = std::min({1.0, 20.0 * frac, 20.0 * (1.0 - frac)});
        x[pos + k] = static_cast<float>(amp * ramp * v / 3.0);
      }
    } else if (kind < 0.85) {
      double lp = 0.0;
      for (std::size_t k = 0; k < len; ++k) {
        const double frac = static_cast<double>(k) / static_cast<double>(len);
        lp = 0.3 * lp + gauss(rng);
        const double ramp = std::min({1.0, 20.0 * frac, 20.0 * (1.0 - frac)});
        x[pos + k] = static_cast<float>(0.15 * amp * ramp * lp);
      }
    }
    pos += len;
  }
  for (auto& v : x) v = std::clamp(v, -0.95f, 0.95f);
  return x;
}

double snr_db(std::span<const float> clean, std::span<const float> degraded) {
  NOLACE_REQUIRE(clean.size() == degraded.size(), "snr_db: length mismatch");
  double s = 0.0, e = 0.0;
  for (std::size_t k = 0; k < clean.size(); ++k) {
    s += static_cast<double>(clean[k]) * clean[k];
    const double d = static_cast<double>(degraded[k]) - clean[k];
    e += d * d;
  }
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(s / e);
}

}  // namespace nolace
