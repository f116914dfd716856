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

#include <map>

#include "nolace/model.hpp"

namespace nolace {
namespace {

constexpr double kSubframesPerSecond = static_cast<double>(kSampleRate) / kFrameSize;
constexpr double kBlocksPerSecond = kSubframesPerSecond / kSubframesPerBlock;

// y = W x + b followed by an elementwise nonlinearity.
double dense(double in, double out, bool activation = true) { return 2.0 * in * out + out + (activation ? out : 0.0); }

// Coefficient generation for one adaptive kernel: shape matvec, joint
// normalization, gain, and scaling h = g * kappa.
double kernel_generation(double n_h, double in_ch, double out_ch, double taps) {
  const double rows = out_ch * in_ch * taps;
  const double shape = 2.0 * n_h * rows + rows;
  const double norm = 2.0 * rows + out_ch * in_ch + rows;
  const double gain = 2.0 * n_h * out_ch + out_ch + 3.0 * out_ch;
  return shape + norm + gain + rows;
}

// Time-varying FIR over one frame, both filters evaluated on the crossfade half.
double frame_filtering(double n, double in_ch, double out_ch, double taps) {
  const double per_sample = out_ch * in_ch * taps * 2.0;
  return n * per_sample + (n / 2.0) * (per_sample + 3.0 * out_ch);
}

}  // namespace

FlopReport count_flops(const ModelConfig& c) {
  FlopReport report;
  if (c.is_degenerate()) return report;

  std::map<std::string, std::int64_t> params;
  for (const auto& req : required_tensors(c)) {
    std::int64_t n = 1;
    for (auto d : req.shape) n *= d;
    const auto dot = req.name.find('.');
    std::string owner = req.name.substr(0, dot);
    if (owner == "conv1" || owner == "cpool" || owner == "conv2" || owner == "tconv" || owner == "gru") {
      owner = "encoder." + owner;
    }
    params[owner] += n;
  }

  const double nf = c.n_f, nr = c.n_r, nh = c.n_h, n = c.frame_size;
  auto add = [&](const std::string& name, double flops_per_second) {
    StageFlops s{name, flops_per_second / 1e6, params[name]};
    report.total_mflops += s.mflops;
    report.parameters += s.parameters;
    report.stages.push_back(std::move(s));
  };

  add("encoder.conv1", kSubframesPerSecond * dense(nf, nr));
  add("encoder.cpool", kBlocksPerSecond * (kSubframesPerBlock * (2.0 * nr * nh + nh) + nh));
  add("encoder.conv2", kBlocksPerSecond * (2.0 * 2.0 * nh * nh + 2.0 * nh + nh + nh));
  add("encoder.tconv", kSubframesPerSecond * dense(nh, nh));
  add("encoder.gru", kSubframesPerSecond * (2.0 * (2.0 * 3.0 * nh * nh) + 6.0 * nh + 11.0 * nh));
  for (int k = 1; k <= c.num_transforms(); ++k) {
    add("ftrans" + std::to_string(k), kSubframesPerSecond * (2.0 * 2.0 * nh * nh + 2.0 * nh + nh + nh));
  }

  for (const auto& stage : signal_stages(c.variant)) {
    double per_frame = 0.0;
    switch (stage.kind) {
      case StageKind::Comb: {
        const double taps = c.comb_taps;
        const double feedthrough = 2.0 * nh + 1.0 + 3.0;
        const double per_sample = 2.0 * taps + 1.0;
        per_frame = kernel_generation(nh, 1, 1, taps) + feedthrough + n * per_sample + (n / 2.0) * (per_sample + 3.0);
        break;
      }
      case StageKind::Conv:
        per_frame = kernel_generation(nh, stage.in_ch, stage.out_ch, c.conv_taps) +
                    frame_filtering(n, stage.in_ch, stage.out_ch, c.conv_taps);
        break;
      case StageKind::Shape: {
        const double blocks = n / kEnvelopeStride;
        const double in = blocks + 1.0 + nh;
        const double hid = c.shape_hidden;
        const double envelope = 2.0 * n + 4.0 * blocks + 1.0;
        const double conv1 = 2.0 * 2.0 * in * hid + 2.0 * hid + hid;
        const double conv2 = 2.0 * 2.0 * hid * n + 2.0 * n + n;
        per_frame = envelope + conv1 + conv2 + n;
        break;
      }
    }
    add(stage.name, kSubframesPerSecond * per_frame);
  }
  return report;
}

}  // namespace nolace
