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

#include "nolace/weights_io.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>

namespace nolace {
namespace {

static_assert(std::numeric_limits<float>::is_iec559, "float must be IEEE-754 binary32");

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<std::byte>(v)); }
  void u16(std::uint16_t v) { put_le(v); }
  void u32(std::uint32_t v) { put_le(v); }
  void i32(std::int32_t v) { put_le(static_cast<std::uint32_t>(v)); }
  void u64(std::uint64_t v) { put_le(v); }
  void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
  void f32s(std::span<const float> vs) {
    for (float v : vs) f32(v);
  }
  void raw(std::span<const std::byte> bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }
  void chars(std::string_view s) {
    for (char c : s) u8(static_cast<std::uint8_t>(c));
  }
  void name(std::string_view s) {
    if (s.size() > std::numeric_limits<std::uint16_t>::max()) throw ContractViolation("name too long");
    u16(static_cast<std::uint16_t>(s.size()));
    chars(s);
  }
  std::vector<std::byte> take() { return std::move(out_); }

 private:
  template <typename T>
  void put_le(T v) {
    for (std::size_t k = 0; k < sizeof(T); ++k) out_.push_back(static_cast<std::byte>((v >> (8 * k)) & 0xFF));
  }
  std::vector<std::byte> out_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::byte> bytes, std::string context) : bytes_(bytes), context_(std::move(context)) {}

  std::uint16_t u16() { return get_le<std::uint16_t>(); }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::int32_t i32() { return static_cast<std::int32_t>(get_le<std::uint32_t>()); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  float f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }
  std::vector<float> f32s(std::uint64_t count) {
    need(count * 4);
    std::vector<float> v(static_cast<std::size_t>(count));
    for (auto& x : v) x = f32();
    return v;
  }
  std::span<const std::byte> raw(std::uint64_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return s;
  }
  std::string chars(std::size_t n) {
    auto s = raw(n);
    return std::string(reinterpret_cast<const char*>(s.data()), s.size());
  }
  std::string name() { return chars(u16()); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::uint64_t n) const {
    if (n > remaining()) throw FormatError(context_ + ": truncated data");
  }
  template <typename T>
  T get_le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) {
      v |= static_cast<T>(static_cast<T>(std::to_integer<std::uint8_t>(bytes_[pos_ + k])) << (8 * k));
    }
    pos_ += sizeof(T);
    return v;
  }

  std::span<const std::byte> bytes_;
  std::string context_;
  std::size_t pos_ = 0;
};

constexpr std::string_view kHeaderTag = "HEAD";
constexpr std::string_view kTensorTag = "TENS";
constexpr std::string_view kFeatureTag = "FEAT";
constexpr std::string_view kVectorTag = "TVEC";

void write_frames(ByteWriter& w, std::span<const FeatureFrame> frames) {
  const std::size_t nf = frames.empty() ? 0 : frames.front().features.size();
  w.u32(static_cast<std::uint32_t>(frames.size()));
  w.u32(static_cast<std::uint32_t>(nf));
  for (const auto& f : frames) {
    if (f.features.size() != nf) throw ContractViolation("feature frames have inconsistent dimensions");
    w.i32(f.pitch_lag);
    w.f32s(f.features);
  }
}

std::vector<FeatureFrame> read_frames(ByteReader& r) {
  const std::uint32_t count = r.u32();
  const std::uint32_t nf = r.u32();
  std::vector<FeatureFrame> frames;
  if (static_cast<std::uint64_t>(count) * (4 + 4ull * nf) > r.remaining()) throw FormatError("feature section: truncated data");
  frames.reserve(count);
  for (std::uint32_t n = 0; n < count; ++n) {
    FeatureFrame f;
    f.pitch_lag = r.i32();
    f.features = r.f32s(nf);
    frames.push_back(std::move(f));
  }
  return frames;
}

std::vector<std::byte> encode_header(const WeightsHeader& h) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(h.variant));
  w.u32(h.n_f);
  w.u32(h.n_r);
  w.u32(h.n_h);
  w.u32(h.frame_size);
  w.u32(h.shape_hidden);
  w.u32(static_cast<std::uint32_t>(h.filters.size()));
  for (const auto& f : h.filters) {
    w.name(f.name);
    w.u32(f.taps);
    w.f32(f.gain_limit);
  }
  return w.take();
}

WeightsHeader decode_header(std::span<const std::byte> payload) {
  ByteReader r(payload, "header section");
  WeightsHeader h;
  const std::uint32_t variant = r.u32();
  if (variant > 1) throw FormatError("header section: unknown variant " + std::to_string(variant));
  h.variant = static_cast<Variant>(variant);
  h.n_f = r.u32();
  h.n_r = r.u32();
  h.n_h = r.u32();
  h.frame_size = r.u32();
  h.shape_hidden = r.u32();
  const std::uint32_t count = r.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    FilterEntry f;
    f.name = r.name();
    f.taps = r.u32();
    f.gain_limit = r.f32();
    h.filters.push_back(std::move(f));
  }
  return h;
}

std::vector<std::byte> encode_tensors(std::span<const Tensor> tensors) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    if (t.data.size() != t.numel()) throw ContractViolation("tensor " + t.name + ": data size does not match shape");
    w.name(t.name);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) w.u32(d);
    w.f32s(t.data);
  }
  return w.take();
}

std::vector<Tensor> decode_tensors(std::span<const std::byte> payload) {
  ByteReader r(payload, "tensor section");
  const std::uint32_t count = r.u32();
  std::vector<Tensor> tensors;
  for (std::uint32_t k = 0; k < count; ++k) {
    Tensor t;
    t.name = r.name();
    const std::uint32_t ndim = r.u32();
    if (ndim > 8) throw FormatError("tensor " + t.name + ": implausible rank " + std::to_string(ndim));
    std::uint64_t numel = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      t.shape.push_back(r.u32());
      numel *= t.shape.back();
      if (numel > (1ull << 40)) throw FormatError("tensor " + t.name + ": implausible size");
    }
    t.data = r.f32s(numel);
    tensors.push_back(std::move(t));
  }
  return tensors;
}

std::string shape_string(std::span<const std::uint32_t> shape) {
  std::string s = "[";
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (k) s += ", ";
    s += std::to_string(shape[k]);
  }
  return s + "]";
}

}  // namespace

std::vector<std::byte> encode_container(const Container& c) {
  ByteWriter w;
  w.chars(std::string_view(kContainerMagic, 4));
  w.u16(c.version_major);
  w.u16(c.version_minor);
  w.u32(static_cast<std::uint32_t>(c.sections.size()));
  for (const auto& s : c.sections) {
    if (s.tag.size() != 4) throw ContractViolation("section tag must be four characters: '" + s.tag + "'");
    w.chars(s.tag);
    w.u64(s.payload.size());
    w.raw(s.payload);
  }
  return w.take();
}

Container decode_container(std::span<const std::byte> bytes) {
  ByteReader r(bytes, "container");
  if (r.chars(4) != std::string_view(kContainerMagic, 4)) throw FormatError("container: bad magic");
  Container c;
  c.version_major = r.u16();
  c.version_minor = r.u16();
  if (c.version_major != kFormatMajor) {
    throw FormatError("container: unsupported format version " + std::to_string(c.version_major) + "." +
                      std::to_string(c.version_minor));
  }
  const std::uint32_t count = r.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    Section s;
    s.tag = r.chars(4);
    const std::uint64_t len = r.u64();
    auto payload = r.raw(len);
    s.payload.assign(payload.begin(), payload.end());
    c.sections.push_back(std::move(s));
  }
  if (r.remaining() != 0) spdlog::warn("container: {} trailing bytes after last section ignored", r.remaining());
  return c;
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> bytes(buf.size());
  std::memcpy(bytes.data(), buf.data(), buf.size());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path.string());
}

const FilterEntry* WeightsHeader::find_filter(std::string_view name) const {
  auto it = std::find_if(filters.begin(), filters.end(), [&](const FilterEntry& f) { return f.name == name; });
  return it == filters.end() ? nullptr : &*it;
}

WeightsHeader make_header(const ModelConfig& config) {
  WeightsHeader h;
  h.variant = config.variant;
  h.n_f = static_cast<std::uint32_t>(config.n_f);
  h.n_r = static_cast<std::uint32_t>(config.n_r);
  h.n_h = static_cast<std::uint32_t>(config.n_h);
  h.frame_size = static_cast<std::uint32_t>(config.frame_size);
  h.shape_hidden = static_cast<std::uint32_t>(config.variant == Variant::NoLace ? config.shape_hidden : 0);
  for (const auto& stage : signal_stages(config.variant)) {
    if (stage.kind == StageKind::Shape) continue;
    const int taps = stage.kind == StageKind::Comb ? config.comb_taps : config.conv_taps;
    h.filters.push_back({stage.name, static_cast<std::uint32_t>(taps), config.gain_limit});
  }
  return h;
}

ModelConfig config_from_header(const WeightsHeader& h) {
  ModelConfig c;
  c.variant = h.variant;
  c.n_f = static_cast<int>(h.n_f);
  c.n_r = static_cast<int>(h.n_r);
  c.n_h = static_cast<int>(h.n_h);
  c.frame_size = static_cast<int>(h.frame_size);
  c.shape_hidden = h.variant == Variant::NoLace ? static_cast<int>(h.shape_hidden) : kFrameSize;
  if (const auto* f = h.find_filter("adacomb1")) c.comb_taps = static_cast<int>(f->taps);
  if (const auto* f = h.find_filter("adaconv1")) {
    c.conv_taps = static_cast<int>(f->taps);
    c.gain_limit = f->gain_limit;
  }
  return c;
}

std::size_t Tensor::numel() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

const Tensor* ModelWeights::find(std::string_view name) const {
  auto it = std::find_if(tensors.begin(), tensors.end(), [&](const Tensor& t) { return t.name == name; });
  return it == tensors.end() ? nullptr : &*it;
}

Tensor* ModelWeights::find(std::string_view name) {
  auto it = std::find_if(tensors.begin(), tensors.end(), [&](const Tensor& t) { return t.name == name; });
  return it == tensors.end() ? nullptr : &*it;
}

void ModelWeights::set(Tensor tensor) {
  if (auto* existing = find(tensor.name)) {
    *existing = std::move(tensor);
  } else {
    tensors.push_back(std::move(tensor));
  }
}

std::size_t ModelWeights::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.data.size();
  return n;
}

std::vector<std::byte> encode_weights(const ModelWeights& weights) {
  Container c;
  c.sections.push_back({std::string(kHeaderTag), encode_header(weights.header)});
  c.sections.push_back({std::string(kTensorTag), encode_tensors(weights.tensors)});
  return encode_container(c);
}

ModelWeights decode_weights(std::span<const std::byte> bytes) {
  const Container c = decode_container(bytes);
  ModelWeights w;
  bool have_header = false;
  bool have_tensors = false;
  for (const auto& s : c.sections) {
    if (s.tag == kHeaderTag && !have_header) {
      w.header = decode_header(s.payload);
      have_header = true;
    } else if (s.tag == kTensorTag) {
      auto more = decode_tensors(s.payload);
      w.tensors.insert(w.tensors.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
      have_tensors = true;
    } else {
      spdlog::warn("weights: ignoring section '{}' ({} bytes)", s.tag, s.payload.size());
    }
  }
  if (!have_header) throw FormatError("weights: missing header section");
  if (!have_tensors) throw FormatError("weights: missing tensor section");
  return w;
}

ModelWeights load_weights(const std::filesystem::path& path) {
  try {
    return decode_weights(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_weights(const ModelWeights& weights, const std::filesystem::path& path) {
  write_file(path, encode_weights(weights));
}

std::string ValidationReport::to_json() const {
  auto issues = [](const std::vector<ValidationIssue>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& i : v) arr.push_back({{"kind", i.kind}, {"tensor", i.tensor}, {"message", i.message}});
    return arr;
  };
  nlohmann::json j = {{"ok", ok()}, {"failures", issues(failures)}, {"warnings", issues(warnings)}};
  return j.dump(2);
}

ValidationReport validate(const ModelWeights& weights, const ModelConfig& config) {
  ValidationReport report;
  auto fail = [&](std::string kind, std::string tensor, std::string msg) {
    report.failures.push_back({std::move(kind), std::move(tensor), std::move(msg)});
  };
  const auto& h = weights.header;

  auto check_dim = [&](const char* field, std::uint32_t header_value, int config_value) {
    if (static_cast<int>(header_value) != config_value) {
      fail("consistency", "", std::string("header ") + field + "=" + std::to_string(header_value) +
                                  " but configuration expects " + std::to_string(config_value));
    }
  };
  if (h.variant != config.variant) {
    fail("consistency", "", "header variant " + std::string(to_string(h.variant)) + " but configuration expects " +
                                std::string(to_string(config.variant)));
  }
  check_dim("n_f", h.n_f, config.n_f);
  check_dim("n_r", h.n_r, config.n_r);
  check_dim("n_h", h.n_h, config.n_h);
  check_dim("frame_size", h.frame_size, config.frame_size);
  if (config.variant == Variant::NoLace) check_dim("shape_hidden", h.shape_hidden, config.shape_hidden);
  if (config.frame_size != kFrameSize) fail("consistency", "", "frame_size must be " + std::to_string(kFrameSize));

  for (const auto& stage : signal_stages(config.variant)) {
    if (stage.kind == StageKind::Shape) continue;
    const auto* f = h.find_filter(stage.name);
    const int taps = stage.kind == StageKind::Comb ? config.comb_taps : config.conv_taps;
    if (f == nullptr) {
      fail("missing", stage.name, "no filter table entry for " + stage.name);
      continue;
    }
    if (static_cast<int>(f->taps) != taps || taps < 1) {
      fail("consistency", stage.name, "filter table lists " + std::to_string(f->taps) + " taps, expected " +
                                          std::to_string(taps));
    }
    if (!(std::isfinite(f->gain_limit) && f->gain_limit > 0.0f)) {
      fail("consistency", stage.name, "gain limit must be positive and finite");
    }
  }

  // Dimensions implied by the tensors themselves.
  auto implied = [&](std::string_view name, std::size_t axis, const char* field, int expected) {
    const auto* t = weights.find(name);
    if (t && t->shape.size() > axis && static_cast<int>(t->shape[axis]) != expected) {
      fail("consistency", std::string(name), std::string("tensor implies ") + field + "=" +
                                                 std::to_string(t->shape[axis]) + " but header says " +
                                                 std::to_string(expected));
    }
  };
  implied("gru.w_hh", 1, "n_h", static_cast<int>(h.n_h));
  implied("conv1.w", 0, "n_r", static_cast<int>(h.n_r));
  implied("conv1.w", 1, "n_f", static_cast<int>(h.n_f));

  std::map<std::string, int> seen;
  for (const auto& t : weights.tensors) ++seen[t.name];

  const auto required = required_tensors(config);
  for (const auto& req : required) {
    const auto it = seen.find(req.name);
    if (it == seen.end()) {
      fail("missing", req.name, "required tensor " + req.name + " not present");
      continue;
    }
    if (it->second > 1) fail("duplicate", req.name, "tensor " + req.name + " present " + std::to_string(it->second) + " times");
    const auto* t = weights.find(req.name);
    if (t->shape != req.shape) {
      fail("shape", req.name, "tensor " + req.name + " has shape " + shape_string(t->shape) + ", expected " +
                                  shape_string(req.shape));
      continue;
    }
    if (t->data.size() != t->numel()) {
      fail("shape", req.name, "tensor " + req.name + " data length does not match its shape");
      continue;
    }
    const auto bad = std::find_if(t->data.begin(), t->data.end(), [](float v) { return !std::isfinite(v); });
    if (bad != t->data.end()) {
      fail("nonfinite", req.name, "tensor " + req.name + " has a non-finite value at flat index " +
                                      std::to_string(bad - t->data.begin()));
    }
  }
  for (const auto& [name, count] : seen) {
    const bool known = std::any_of(required.begin(), required.end(), [&](const auto& r) { return r.name == name; });
    if (!known) report.warnings.push_back({"unexpected", name, "tensor " + name + " is not used by this configuration"});
  }
  return report;
}

ValidationReport validate(const ModelWeights& weights) { return validate(weights, config_from_header(weights.header)); }

void save_test_vectors(std::span<const TestVector> vectors, const std::filesystem::path& path) {
  Container c;
  for (const auto& v : vectors) {
    if (v.input.size() != v.expected.size() || v.input.size() != v.features.size() * kFrameSize) {
      throw ContractViolation("test vector lengths inconsistent (need 80 samples per feature frame)");
    }
    ByteWriter w;
    w.f32(v.tolerance);
    w.u32(static_cast<std::uint32_t>(v.input.size()));
    w.f32s(v.input);
    write_frames(w, v.features);
    w.f32s(v.expected);
    c.sections.push_back({std::string(kVectorTag), w.take()});
  }
  write_file(path, encode_container(c));
}

std::vector<TestVector> load_test_vectors(const std::filesystem::path& path) {
  const Container c = decode_container(read_file(path));
  std::vector<TestVector> out;
  for (const auto& s : c.sections) {
    if (s.tag != kVectorTag) {
      spdlog::warn("test vectors: ignoring section '{}'", s.tag);
      continue;
    }
    ByteReader r(s.payload, "test vector");
    TestVector v;
    v.tolerance = r.f32();
    const std::uint32_t n = r.u32();
    v.input = r.f32s(n);
    v.features = read_frames(r);
    v.expected = r.f32s(n);
    if (v.input.size() != v.features.size() * kFrameSize) throw FormatError("test vector: 80 samples per frame required");
    out.push_back(std::move(v));
  }
  return out;
}

void save_features(std::span<const FeatureFrame> frames, const std::filesystem::path& path) {
  ByteWriter w;
  write_frames(w, frames);
  Container c;
  c.sections.push_back({std::string(kFeatureTag), w.take()});
  write_file(path, encode_container(c));
}

std::vector<FeatureFrame> load_features(const std::filesystem::path& path) {
  const Container c = decode_container(read_file(path));
  for (const auto& s : c.sections) {
    if (s.tag == kFeatureTag) {
      ByteReader r(s.payload, "feature section");
      return read_frames(r);
    }
  }
  throw FormatError(path.string() + ": no feature section");
}

}  // namespace nolace
