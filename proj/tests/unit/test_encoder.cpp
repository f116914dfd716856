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

#include "../oracle/reference.hpp"
#include "../support.hpp"
#include "nolace/model.hpp"

using namespace nolace;
using testing::Rng;

namespace {

ModelConfig small_config() {
  ModelConfig c = ModelConfig::nolace();
  c.n_r = 24;
  c.n_h = 40;
  return c;
}

std::vector<LatentChain> encode_all(const EncoderWeights& w, const std::vector<FeatureFrame>& frames, int bypass = 0) {
  EncoderState state = EncoderState::for_weights(w);
  return encode(w, frames, state, bypass);
}

}  // namespace

TEST_CASE("zero weights and zero features give zero latents") {
  const auto weights = make_identity_weights(ModelConfig::nolace());
  const Model model = Model::from_weights(weights);
  std::vector<FeatureFrame> frames(8, FeatureFrame{std::vector<float>(kDefaultFeatureDim, 0.0f), 0});
  for (const auto& chain : encode_all(model.encoder(), frames)) {
    REQUIRE(chain.phi.size() == 6);
    for (const auto& phi : chain.phi) {
      CHECK(phi.size() == 256);
      for (float v : phi) CHECK(v == 0.0f);
    }
  }
}

TEST_CASE("random weights match the scalar oracle") {
  Rng rng(21);
  for (const auto variant : {Variant::Lace, Variant::NoLace}) {
    ModelConfig cfg = small_config();
    cfg.variant = variant;
    const auto weights = make_random_weights(cfg, 100 + static_cast<int>(variant));
    const Model model = Model::from_weights(weights);
    const auto frames = testing::random_frames(rng, 8);
    const auto chains = encode_all(model.encoder(), frames);
    const auto ref = oracle::encode(weights, frames, cfg.num_transforms());
    REQUIRE(chains.size() == 8);
    for (std::size_t n = 0; n < 8; ++n) {
      REQUIRE(chains[n].phi.size() == static_cast<std::size_t>(1 + cfg.num_transforms()));
      for (std::size_t k = 0; k < chains[n].phi.size(); ++k) CHECK(oracle::rel_error(chains[n].phi[k], ref[n][k]) < 1e-5);
    }
  }
}

TEST_CASE("chunked encoding is bit-identical to one-shot encoding") {
  Rng rng(22);
  const auto weights = make_random_weights(small_config(), 7);
  const Model model = Model::from_weights(weights);
  const auto frames = testing::random_frames(rng, 24);
  const auto whole = encode_all(model.encoder(), frames);
  EncoderState state = EncoderState::for_weights(model.encoder());
  std::vector<LatentChain> chunked;
  std::size_t pos = 0;
  for (std::size_t chunk : {4u, 8u, 4u, 8u}) {
    const auto part = encode(model.encoder(), std::span<const FeatureFrame>(frames).subspan(pos, chunk), state);
    chunked.insert(chunked.end(), part.begin(), part.end());
    pos += chunk;
  }
  CHECK(chunked == whole);
}

TEST_CASE("perturbing a later block never changes earlier blocks") {
  Rng rng(23);
  const auto weights = make_random_weights(small_config(), 8);
  const Model model = Model::from_weights(weights);
  for (int trial = 0; trial < 20; ++trial) {
    auto frames = testing::random_frames(rng, 16);
    const auto base = encode_all(model.encoder(), frames);
    const std::size_t k = static_cast<std::size_t>(trial % 4);
    frames[4 * k + static_cast<std::size_t>(trial % 4)].features[static_cast<std::size_t>(trial)] += 1.0f;
    const auto changed = encode_all(model.encoder(), frames);
    for (std::size_t n = 0; n < 4 * k; ++n) CHECK(changed[n] == base[n]);
  }
}

TEST_CASE("four subframes in, four latent chains out") {
  Rng rng(24);
  const auto weights = make_random_weights(small_config(), 9);
  const Model model = Model::from_weights(weights);
  CHECK(encode_all(model.encoder(), testing::random_frames(rng, 4)).size() == 4);
  CHECK(encode_all(model.encoder(), testing::random_frames(rng, 12)).size() == 12);
  EncoderState state = EncoderState::for_weights(model.encoder());
  CHECK_THROWS_AS(encode(model.encoder(), testing::random_frames(rng, 6), state), ContractViolation);
  CHECK_THROWS_AS(encode(model.encoder(), testing::random_frames(rng, 4, 50), state), ContractViolation);
}

TEST_CASE("bypassed transforms tie early latents to phi(1)") {
  Rng rng(25);
  const auto weights = make_random_weights(small_config(), 10);
  const Model model = Model::from_weights(weights);
  const auto frames = testing::random_frames(rng, 8);
  const auto chains = encode_all(model.encoder(), frames, 2);
  const auto ref = oracle::encode(weights, frames, 5, 2);
  for (std::size_t n = 0; n < chains.size(); ++n) {
    CHECK(chains[n].phi[1] == chains[n].phi[0]);
    CHECK(chains[n].phi[2] == chains[n].phi[0]);
    CHECK(chains[n].phi[3] != chains[n].phi[0]);
    for (std::size_t k = 0; k < 6; ++k) CHECK(oracle::rel_error(chains[n].phi[k], ref[n][k]) < 1e-5);
  }
}

TEST_CASE("state reset returns to a fresh state") {
  Rng rng(26);
  const auto weights = make_random_weights(small_config(), 11);
  const Model model = Model::from_weights(weights);
  EncoderState state = EncoderState::for_weights(model.encoder());
  encode(model.encoder(), testing::random_frames(rng, 8), state);
  CHECK_FALSE(state == EncoderState::for_weights(model.encoder()));
  state.reset();
  CHECK(state == EncoderState::for_weights(model.encoder()));
}

TEST_SUITE("feature transform") {
  Conv1d make_transform(int dim) {
    Conv1d c;
    c.taps = {Matrix::Zero(dim, dim), Matrix::Zero(dim, dim)};
    c.bias = Vector::Zero(dim);
    return c;
  }

  TEST_CASE("identity current tap gives tanh(phi + bias)") {
    Rng rng(27);
    Conv1d t = make_transform(8);
    t.taps[1] = Matrix::Identity(8, 8);
    testing::fill(rng, t.bias, 0.5f);
    std::vector<std::vector<float>> seq{testing::uniform(rng, 8), testing::uniform(rng, 8)};
    std::vector<float> prev(8, 0.0f);
    const auto out = feature_transform(t, seq, prev);
    for (std::size_t n = 0; n < 2; ++n)
      for (int j = 0; j < 8; ++j)
        CHECK(out[n][static_cast<std::size_t>(j)] == doctest::Approx(std::tanh(seq[n][static_cast<std::size_t>(j)] + t.bias[j])).epsilon(1e-6));
    CHECK(prev == seq.back());
  }

  TEST_CASE("zero weights give tanh(bias)") {
    Rng rng(28);
    Conv1d t = make_transform(8);
    testing::fill(rng, t.bias, 1.0f);
    std::vector<std::vector<float>> seq{testing::uniform(rng, 8)};
    std::vector<float> prev(8, 0.0f);
    const auto out = feature_transform(t, seq, prev);
    for (int j = 0; j < 8; ++j) CHECK(out[0][static_cast<std::size_t>(j)] == doctest::Approx(std::tanh(t.bias[j])).epsilon(1e-6));
  }

  TEST_CASE("random transform matches a straight-line reference") {
    Rng rng(29);
    Conv1d t = make_transform(12);
    testing::fill(rng, t.taps[0], 0.3f);
    testing::fill(rng, t.taps[1], 0.3f);
    testing::fill(rng, t.bias, 0.3f);
    std::vector<std::vector<float>> seq;
    for (int n = 0; n < 10; ++n) seq.push_back(testing::uniform(rng, 12));
    std::vector<float> prev(12, 0.0f);
    const auto out = feature_transform(t, seq, prev);
    oracle::Vec last(12, 0.0);
    for (std::size_t n = 0; n < seq.size(); ++n) {
      oracle::Vec ref(12);
      for (int o = 0; o < 12; ++o) {
        double acc = t.bias[o];
        for (int i = 0; i < 12; ++i) acc += t.taps[0](o, i) * last[static_cast<std::size_t>(i)] + t.taps[1](o, i) * seq[n][static_cast<std::size_t>(i)];
        ref[static_cast<std::size_t>(o)] = std::tanh(acc);
      }
      CHECK(oracle::rel_error(out[n], ref) < 1e-5);
      last = oracle::to_vec(seq[n]);
    }
  }

  TEST_CASE("dimension mismatch is rejected") {
    Conv1d t = make_transform(8);
    std::vector<std::vector<float>> seq{std::vector<float>(9, 0.0f)};
    std::vector<float> prev(8, 0.0f);
    CHECK_THROWS_AS(feature_transform(t, seq, prev), ContractViolation);
  }
}
