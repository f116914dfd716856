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

// Single-file binary container for model weights, feature sidecars and
// parity test vectors. The byte layout is documented in docs/file_format.md.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nolace/config.hpp"

namespace nolace {

inline constexpr char kContainerMagic[4] = {'N', 'L', 'C', 'E'};
inline constexpr std::uint16_t kFormatMajor = 1;
inline constexpr std::uint16_t kFormatMinor = 0;

struct Section {
  std::string tag;  // exactly four ASCII characters
  std::vector<std::byte> payload;
};

// Raw container: magic, version, then tagged sections.
struct Container {
  std::uint16_t version_major = kFormatMajor;
  std::uint16_t version_minor = kFormatMinor;
  std::vector<Section> sections;
};

std::vector<std::byte> encode_container(const Container& c);
// Throws FormatError on bad magic, unsupported major version or truncation.
Container decode_container(std::span<const std::byte> bytes);

std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

struct FilterEntry {
  std::string name;
  std::uint32_t taps = 0;
  float gain_limit = kDefaultGainLimit;

  bool operator==(const FilterEntry&) const = default;
};

struct WeightsHeader {
  Variant variant = Variant::NoLace;
  std::uint32_t n_f = 0;
  std::uint32_t n_r = 0;
  std::uint32_t n_h = 0;
  std::uint32_t frame_size = kFrameSize;
  std::uint32_t shape_hidden = 0;
  std::vector<FilterEntry> filters;

  const FilterEntry* find_filter(std::string_view name) const;
  bool operator==(const WeightsHeader&) const = default;
};

WeightsHeader make_header(const ModelConfig& config);
// Filter taps are read from adacomb1 / adaconv1 entries when present.
ModelConfig config_from_header(const WeightsHeader& header);

// Row-major float32 tensor.
struct Tensor {
  std::string name;
  std::vector<std::uint32_t> shape;
  std::vector<float> data;

  std::size_t numel() const;
  bool operator==(const Tensor&) const = default;
};

struct ModelWeights {
  WeightsHeader header;
  std::vector<Tensor> tensors;

  const Tensor* find(std::string_view name) const;
  Tensor* find(std::string_view name);
  // Replaces an existing tensor of the same name or appends.
  void set(Tensor tensor);
  std::size_t parameter_count() const;
};

std::vector<std::byte> encode_weights(const ModelWeights& weights);
ModelWeights decode_weights(std::span<const std::byte> bytes);
ModelWeights load_weights(const std::filesystem::path& path);
void save_weights(const ModelWeights& weights, const std::filesystem::path& path);

struct ValidationIssue {
  std::string kind;  // missing | duplicate | shape | nonfinite | consistency | unexpected
  std::string tensor;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> failures;
  std::vector<ValidationIssue> warnings;

  bool ok() const { return failures.empty(); }
  std::string to_json() const;
};

ValidationReport validate(const ModelWeights& weights, const ModelConfig& config);
// Validates against the configuration described by the header itself.
ValidationReport validate(const ModelWeights& weights);

// Input chunk (graph domain), conditioning frames and expected graph output.
struct TestVector {
  std::vector<float> input;
  std::vector<FeatureFrame> features;
  std::vector<float> expected;
  float tolerance = 1e-4f;  // RMS of (output - expected)

  bool operator==(const TestVector&) const = default;
};

void save_test_vectors(std::span<const TestVector> vectors, const std::filesystem::path& path);
std::vector<TestVector> load_test_vectors(const std::filesystem::path& path);

void save_features(std::span<const FeatureFrame> frames, const std::filesystem::path& path);
std::vector<FeatureFrame> load_features(const std::filesystem::path& path);

}  // namespace nolace
