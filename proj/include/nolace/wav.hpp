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

// Minimal RIFF/WAVE I/O restricted to the engine's native format:
// 16-bit PCM, mono, 16 kHz. Anything else is rejected with FormatError.

#include <filesystem>
#include <span>
#include <vector>

namespace nolace {

// Samples scaled to [-1, 1).
std::vector<float> read_wav(const std::filesystem::path& path);

// Rounds to the nearest int16 and saturates.
void write_wav(const std::filesystem::path& path, std::span<const float> samples);

}  // namespace nolace
