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

#include "nolace/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>

#include "nolace/ddsp.hpp"
#include "nolace/errors.hpp"
#include "nolace/weights_io.hpp"

namespace nolace {
namespace {

std::uint32_t le32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

std::uint16_t le16(const std::vector<std::uint8_t>& b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | b[at + 1] << 8);
}

void put32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) b.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void put16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace

std::vector<float> read_wav(const std::filesystem::path& path) {
  const auto raw = read_file(path);
  std::vector<std::uint8_t> bytes(raw.size());
  std::memcpy(bytes.data(), raw.data(), raw.size());
  const std::string where = path.string() + ": ";
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError(where + "not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id(reinterpret_cast<const char*>(bytes.data() + pos), 4);
    const std::size_t size = le32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw FormatError(where + "truncated '" + id + "' chunk");
    if (id == "fmt ") {
      if (size < 16) throw FormatError(where + "fmt chunk too short");
      const auto format = le16(bytes, body);
      const auto channels = le16(bytes, body + 2);
      const auto rate = le32(bytes, body + 4);
      const auto bits = le16(bytes, body + 14);
      if (format != 1 || bits != 16) throw FormatError(where + "only 16-bit PCM is supported");
      if (channels != 1) throw FormatError(where + "only mono audio is supported, got " + std::to_string(channels) + " channels");
      if (rate != static_cast<std::uint32_t>(kSampleRate)) {
        throw FormatError(where + "sample rate must be 16000 Hz, got " + std::to_string(rate));
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError(where + "data chunk precedes fmt chunk");
      std::vector<float> out(size / 2);
      for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = static_cast<float>(static_cast<std::int16_t>(le16(bytes, body + 2 * k))) / 32768.0f;
      }
      return out;
    }
    pos = body + size + (size & 1);
  }
  throw FormatError(where + "no data chunk");
}

void write_wav(const std::filesystem::path& path, std::span<const float> samples) {
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::vector<std::uint8_t> b;
  b.reserve(44 + data_bytes);
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  put32(b, 36 + data_bytes);
  b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(b, 16);
  put16(b, 1);
  put16(b, 1);
  put32(b, kSampleRate);
  put32(b, kSampleRate * 2);
  put16(b, 2);
  put16(b, 16);
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  put32(b, data_bytes);
  for (float v : samples) {
    const float scaled = std::round(std::clamp(v, -1.0f, 1.0f) * 32768.0f);
    put16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(scaled, -32768.0f, 32767.0f))));
  }
  write_file(path, std::as_bytes(std::span<const std::uint8_t>(b)));
}

}  // namespace nolace
