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

#include "nolace/model.hpp"

#include <algorithm>
#include <string>

namespace nolace {
namespace {

const Tensor& get(const ModelWeights& w, const std::string& name) {
  const auto* t = w.find(name);
  if (t == nullptr) throw ValidationError("missing tensor " + name);
  return *t;
}

Matrix matrix_2d(const Tensor& t) {
  Matrix m(t.shape[0], t.shape[1]);
  std::copy(t.data.begin(), t.data.end(), m.data());
  return m;
}

Vector vector_1d(const Tensor& t) {
  Vector v(static_cast<Eigen::Index>(t.data.size()));
  std::copy(t.data.begin(), t.data.end(), v.data());
  return v;
}

// [out, in, K] -> K matrices of out x in.
std::vector<Matrix> conv_taps(const Tensor& t) {
  const auto out = t.shape[0], in = t.shape[1], k = t.shape[2];
  std::vector<Matrix> taps(k, Matrix(out, in));
  for (std::uint32_t o = 0; o < out; ++o)
    for (std::uint32_t i = 0; i < in; ++i)
      for (std::uint32_t j = 0; j < k; ++j) taps[j](o, i) = t.data[(static_cast<std::size_t>(o) * in + i) * k + j];
  return taps;
}

Conv1d conv_layer(const ModelWeights& w, const std::string& prefix) {
  return Conv1d{conv_taps(get(w, prefix + ".w")), vector_1d(get(w, prefix + ".b"))};
}

EncoderWeights build_encoder(const ModelWeights& w, const ModelConfig& c) {
  EncoderWeights e;
  e.conv1 = conv_layer(w, "conv1");
  e.cpool = conv_layer(w, "cpool");
  e.conv2 = conv_layer(w, "conv2");
  // Transposed conv weights are stored [in, out, K].
  const Tensor& tw = get(w, "tconv.w");
  const auto nh = static_cast<std::uint32_t>(c.n_h);
  for (std::uint32_t j = 0; j < 4; ++j) {
    Matrix m(nh, nh);
    for (std::uint32_t i = 0; i < nh; ++i)
      for (std::uint32_t o = 0; o < nh; ++o) m(o, i) = tw.data[(static_cast<std::size_t>(i) * nh + o) * 4 + j];
    e.tconv[j] = std::move(m);
  }
  e.tconv_bias = vector_1d(get(w, "tconv.b"));
  e.gru.w_ih = matrix_2d(get(w, "gru.w_ih"));
  e.gru.w_hh = matrix_2d(get(w, "gru.w_hh"));
  e.gru.b_ih = vector_1d(get(w, "gru.b_ih"));
  e.gru.b_hh = vector_1d(get(w, "gru.b_hh"));
  for (int k = 1; k <= c.num_transforms(); ++k) e.ftrans.push_back(conv_layer(w, "ftrans" + std::to_string(k)));
  e.check();
  return e;
}

KernelSpec build_kernel(const ModelWeights& w, const StageInfo& s, int taps, float gain_limit) {
  KernelSpec k;
  k.in_ch = s.in_ch;
  k.out_ch = s.out_ch;
  k.taps = taps;
  k.gain_limit = gain_limit;
  k.w_shape = matrix_2d(get(w, s.name + ".w_shape"));
  k.b_shape = vector_1d(get(w, s.name + ".b_shape"));
  k.w_gain = matrix_2d(get(w, s.name + ".w_gain"));
  k.b_gain = vector_1d(get(w, s.name + ".b_gain"));
  k.check();
  return k;
}

ShapeParams build_shape(const ModelWeights& w, const StageInfo& s, const ModelConfig& c) {
  ShapeParams p;
  p.feature_dim = c.n_h;
  p.hidden = c.shape_hidden;
  p.frame_size = c.frame_size;
  auto conv1 = conv_taps(get(w, s.name + ".conv1.w"));
  auto conv2 = conv_taps(get(w, s.name + ".conv2.w"));
  p.conv1_prev = std::move(conv1[0]);
  p.conv1_cur = std::move(conv1[1]);
  p.conv1_bias = vector_1d(get(w, s.name + ".conv1.b"));
  p.conv2_prev = std::move(conv2[0]);
  p.conv2_cur = std::move(conv2[1]);
  p.conv2_bias = vector_1d(get(w, s.name + ".conv2.b"));
  p.check();
  return p;
}

}  // namespace

void StreamState::reset() {
  encoder.reset();
  for (auto& s : stages) std::visit([](auto& st) { st.reset(); }, s);
  samples_processed = 0;
}

Model Model::from_weights(const ModelWeights& weights) {
  const ValidationReport report = validate(weights);
  if (!report.ok()) {
    std::string msg = "model weights failed validation:";
    for (const auto& f : report.failures) msg += "\n  [" + f.kind + "] " + f.message;
    throw ValidationError(msg);
  }
  Model m;
  m.config_ = config_from_header(weights.header);
  m.encoder_ = build_encoder(weights, m.config_);
  for (const auto& info : signal_stages(m.config_.variant)) {
    Stage stage{info, {}};
    if (info.kind == StageKind::Shape) {
      stage.params = build_shape(weights, info, m.config_);
    } else {
      const float gain_limit = weights.header.find_filter(info.name)->gain_limit;
      if (info.kind == StageKind::Comb) {
        CombSpec comb;
        comb.kernel = build_kernel(weights, info, m.config_.comb_taps, gain_limit);
        comb.w_feedthrough = matrix_2d(get(weights, info.name + ".w_ff"));
        comb.b_feedthrough = vector_1d(get(weights, info.name + ".b_ff"));
        comb.max_lag = kMaxPitchLag + comb.center();
        comb.check();
        stage.params = std::move(comb);
      } else {
        stage.params = build_kernel(weights, info, m.config_.conv_taps, gain_limit);
      }
    }
    m.stages_.push_back(std::move(stage));
  }
  return m;
}

StreamState Model::make_state() const {
  StreamState s;
  s.config = config_;
  s.encoder = EncoderState::for_weights(encoder_);
  for (const auto& stage : stages_) {
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, CombSpec>) {
            s.stages.emplace_back(AdaCombState::for_spec(p));
          } else if constexpr (std::is_same_v<T, KernelSpec>) {
            s.stages.emplace_back(AdaConvState::for_spec(p));
          } else {
            s.stages.emplace_back(AdaShapeState::for_params(p));
          }
        },
        stage.params);
  }
  return s;
}

void Model::enhance_block(StreamState& state, std::span<const float> block, std::span<const FeatureFrame> features,
                          std::span<float> out, const GraphOptions& options, BlockTrace* trace) const {
  if (block.size() != kBlockSize || out.size() != kBlockSize) {
    throw ContractViolation("enhance_block: block must hold " + std::to_string(kBlockSize) + " samples");
  }
  if (features.size() != kSubframesPerBlock) throw ContractViolation("enhance_block: need 4 feature frames per block");
  if (!(state.config == config_) || state.stages.size() != stages_.size()) {
    throw ContractViolation("enhance_block: stream state was created for a different model configuration");
  }

  const int bypass = options.tie_early_latents ? std::min(2, config_.num_transforms()) : 0;
  const auto chains = encode(encoder_, features, state.encoder, bypass);
  const int n = config_.frame_size;

  if (trace != nullptr) {
    for (const auto& stage : stages_) {
      trace->stage_outputs[stage.info.name].assign(static_cast<std::size_t>(stage.info.out_ch),
                                                   std::vector<float>(kBlockSize, 0.0f));
    }
  }

  std::vector<float> signal;
  std::vector<float> next;
  for (int sub = 0; sub < kSubframesPerBlock; ++sub) {
    const auto& chain = chains[static_cast<std::size_t>(sub)];
    const int lag = features[static_cast<std::size_t>(sub)].pitch_lag;
    signal.assign(block.begin() + sub * n, block.begin() + (sub + 1) * n);

    for (std::size_t k = 0; k < stages_.size(); ++k) {
      const Stage& stage = stages_[k];
      const auto& phi = chain.phi[static_cast<std::size_t>(stage.info.latent)];
      switch (stage.info.kind) {
        case StageKind::Comb: {
          next.resize(static_cast<std::size_t>(n));
          adacomb_frame(std::get<CombSpec>(stage.params), phi, lag, std::get<AdaCombState>(state.stages[k]), signal,
                        next);
          signal.swap(next);
          break;
        }
        case StageKind::Conv: {
          next.resize(static_cast<std::size_t>(stage.info.out_ch * n));
          adaconv_frame(std::get<KernelSpec>(stage.params), phi, std::get<AdaConvState>(state.stages[k]), signal,
                        next);
          signal.swap(next);
          break;
        }
        case StageKind::Shape: {
          auto channel = std::span<float>(signal).subspan(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
          adashape_frame(std::get<ShapeParams>(stage.params), phi, std::get<AdaShapeState>(state.stages[k]), channel,
                         channel);
          break;
        }
      }
      if (trace != nullptr) {
        auto& outs = trace->stage_outputs[stage.info.name];
        for (int c = 0; c < stage.info.out_ch; ++c) {
          std::copy_n(signal.begin() + c * n, n, outs[static_cast<std::size_t>(c)].begin() + sub * n);
        }
      }
    }
    std::copy_n(signal.begin(), n, out.begin() + sub * n);
  }
  state.samples_processed += kBlockSize;
}

void Model::enhance(StreamState& state, std::span<const float> signal, std::span<const FeatureFrame> features,
                    std::span<float> out, const GraphOptions& options) const {
  if (signal.size() % kBlockSize != 0) throw ContractViolation("enhance: signal must hold whole 20 ms blocks");
  if (signal.size() != features.size() * static_cast<std::size_t>(config_.frame_size)) {
    throw ContractViolation("enhance: signal length must be 80 samples per feature frame");
  }
  if (out.size() != signal.size()) throw ContractViolation("enhance: output size mismatch");
  const std::size_t blocks = signal.size() / kBlockSize;
  for (std::size_t b = 0; b < blocks; ++b) {
    enhance_block(state, signal.subspan(b * kBlockSize, kBlockSize), features.subspan(b * kSubframesPerBlock, kSubframesPerBlock),
                  out.subspan(b * kBlockSize, kBlockSize), options);
  }
}

std::vector<float> enhance_stream(const Model& model, std::span<const float> signal,
                                  std::span<const FeatureFrame> features, const GraphOptions& options) {
  const auto frame = static_cast<std::size_t>(model.config().frame_size);
  if (signal.size() != frame * features.size()) {
    throw ContractViolation("enhance_stream: signal has " + std::to_string(signal.size()) + " samples but " +
                            std::to_string(features.size()) + " feature frames need " +
                            std::to_string(frame * features.size()));
  }
  const std::size_t padded_frames = (features.size() + kSubframesPerBlock - 1) / kSubframesPerBlock * kSubframesPerBlock;
  std::vector<float> in(padded_frames * frame, 0.0f);
  std::copy(signal.begin(), signal.end(), in.begin());
  std::vector<FeatureFrame> feats(features.begin(), features.end());
  FeatureFrame pad;
  pad.features.assign(static_cast<std::size_t>(model.config().n_f), 0.0f);
  feats.resize(padded_frames, pad);

  std::vector<float> out(in.size());
  StreamState state = model.make_state();
  model.enhance(state, in, feats, out, options);
  out.resize(signal.size());
  return out;
}

}  // namespace nolace
