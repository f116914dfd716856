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

#include <cstring>
#include <filesystem>
#include <json.hpp>

#include "../support.hpp"
#include "nolace/model.hpp"
#include "nolace/weights_io.hpp"

using namespace nolace;
using testing::Rng;

namespace {

ModelConfig tiny(Variant v = Variant::NoLace) {
  ModelConfig c = v == Variant::Lace ? ModelConfig::lace() : ModelConfig::nolace();
  c.n_f = 10;
  c.n_r = 6;
  c.n_h = 8;
  c.comb_taps = 5;
  c.conv_taps = 3;
  c.shape_hidden = 4;
  return c;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("nolace_test_" + name);
}

bool has_failure(const ValidationReport& r, const std::string& kind, const std::string& tensor = "") {
  for (const auto& f : r.failures)
    if (f.kind == kind && (tensor.empty() || f.tensor == tensor)) return true;
  return false;
}

std::vector<std::byte> bytes_of(std::initializer_list<int> v) {
  std::vector<std::byte> out;
  for (int b : v) out.push_back(static_cast<std::byte>(b));
  return out;
}

}  // namespace

TEST_SUITE("container") {
  TEST_CASE("empty container layout is magic, version and a zero count") {
    const auto bytes = encode_container(Container{});
    CHECK(bytes == bytes_of({'N', 'L', 'C', 'E', 1, 0, 0, 0, 0, 0, 0, 0}));
  }

  TEST_CASE("section layout is tag, 64-bit length, payload") {
    Container c;
    c.sections.push_back({"ABCD", bytes_of({0xAA, 0xBB})});
    const auto bytes = encode_container(c);
    CHECK(bytes == bytes_of({'N', 'L', 'C', 'E', 1, 0, 0, 0, 1, 0, 0, 0, 'A', 'B', 'C', 'D', 2, 0, 0, 0, 0, 0, 0, 0, 0xAA, 0xBB}));
    const auto back = decode_container(bytes);
    REQUIRE(back.sections.size() == 1);
    CHECK(back.sections[0].tag == "ABCD");
    CHECK(back.sections[0].payload == c.sections[0].payload);
  }

  TEST_CASE("bad magic and unsupported major version are format errors") {
    auto bytes = encode_container(Container{});
    auto bad_magic = bytes;
    bad_magic[0] = std::byte{'X'};
    CHECK_THROWS_AS(decode_container(bad_magic), FormatError);
    auto bad_version = bytes;
    bad_version[4] = std::byte{2};
    CHECK_THROWS_AS(decode_container(bad_version), FormatError);
    auto newer_minor = bytes;
    newer_minor[6] = std::byte{7};
    CHECK_NOTHROW(decode_container(newer_minor));
  }
}

TEST_SUITE("weights") {
  TEST_CASE("save then load is bit-identical") {
    const auto w = make_random_weights(tiny(), 1);
    const auto path = temp_path("roundtrip.nlw");
    save_weights(w, path);
    const auto back = load_weights(path);
    CHECK(back.header == w.header);
    CHECK(back.tensors == w.tensors);
    CHECK(encode_weights(back) == encode_weights(w));
    std::filesystem::remove(path);
  }

  TEST_CASE("float bits survive including negative zero and denormals") {
    auto w = make_random_weights(tiny(), 2);
    auto& d = w.find("conv1.b")->data;
    d[0] = -0.0f;
    d[1] = 1e-40f;
    d[2] = std::numeric_limits<float>::max();
    const auto back = decode_weights(encode_weights(w));
    const auto& e = back.find("conv1.b")->data;
    CHECK(std::memcmp(d.data(), e.data(), d.size() * sizeof(float)) == 0);
  }

  TEST_CASE("every truncation is a format error") {
    const auto bytes = encode_weights(make_random_weights(tiny(Variant::Lace), 3));
    for (std::size_t len = 0; len < bytes.size(); len += 1 + len / 7) {
      CHECK_THROWS_AS(decode_weights(std::span<const std::byte>(bytes).subspan(0, len)), FormatError);
    }
  }

  TEST_CASE("missing file is a format error") {
    CHECK_THROWS_AS(load_weights(temp_path("does_not_exist.nlw")), FormatError);
  }

  TEST_CASE("unknown sections are skipped") {
    const auto w = make_random_weights(tiny(), 4);
    auto c = decode_container(encode_weights(w));
    c.sections.insert(c.sections.begin() + 1, Section{"XTRA", bytes_of({1, 2, 3})});
    c.sections.push_back(Section{"ZZZZ", {}});
    const auto back = decode_weights(encode_container(c));
    CHECK(back.tensors == w.tensors);
  }

  TEST_CASE("header round-trips through the configuration") {
    for (auto cfg : {tiny(), tiny(Variant::Lace), ModelConfig::nolace()}) {
      // LACE has no shaping stage, so its hidden width is not stored.
      if (cfg.variant == Variant::Lace) cfg.shape_hidden = kFrameSize;
      CHECK(config_from_header(make_header(cfg)) == cfg);
    }
  }
}

TEST_SUITE("validation") {
  TEST_CASE("complete random model has no failures") {
    for (const auto& cfg : {tiny(), tiny(Variant::Lace), ModelConfig::nolace(), ModelConfig::lace()}) {
      const auto report = validate(make_random_weights(cfg, 5), cfg);
      CHECK(report.ok());
      CHECK(report.failures.empty());
      CHECK(report.warnings.empty());
    }
  }

  TEST_CASE("NaN is a finiteness failure") {
    auto w = make_random_weights(tiny(), 6);
    w.find("adashape2.conv1.w")->data[5] = std::nanf("");
    const auto r = validate(w);
    CHECK(has_failure(r, "nonfinite", "adashape2.conv1.w"));
    w.find("adashape2.conv1.w")->data[5] = std::numeric_limits<float>::infinity();
    CHECK(has_failure(validate(w), "nonfinite", "adashape2.conv1.w"));
  }

  TEST_CASE("n_h disagreement between header and tensors is a consistency failure") {
    const auto w = make_random_weights(tiny(), 7);
    auto bad = w;
    bad.header.n_h = 16;
    const auto r = validate(bad);
    CHECK(has_failure(r, "consistency", "gru.w_hh"));
    CHECK_FALSE(r.ok());
  }

  TEST_CASE("header and configuration disagreement is reported") {
    const auto w = make_random_weights(tiny(), 8);
    auto cfg = tiny();
    cfg.n_r = 7;
    CHECK(has_failure(validate(w, cfg), "consistency"));
    CHECK(has_failure(validate(w, tiny(Variant::Lace)), "consistency"));
  }

  TEST_CASE("wrong shape names the tensor") {
    auto w = make_random_weights(tiny(), 9);
    auto* t = w.find("adaconv3.w_shape");
    t->shape = {t->shape[0] - 1, t->shape[1]};
    t->data.resize(t->numel());
    const auto r = validate(w);
    CHECK(has_failure(r, "shape", "adaconv3.w_shape"));
    try {
      (void)Model::from_weights(w);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("adaconv3.w_shape") != std::string::npos);
    }
  }

  TEST_CASE("missing, duplicate and unexpected tensors") {
    auto w = make_random_weights(tiny(), 10);
    w.tensors.erase(w.tensors.begin() + 3);
    w.tensors.push_back(w.tensors.front());
    w.tensors.push_back(Tensor{"extra.w", {2}, {1.0f, 2.0f}});
    const auto r = validate(w);
    CHECK(has_failure(r, "missing"));
    CHECK(has_failure(r, "duplicate", w.tensors.front().name));
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].tensor == "extra.w");
  }

  TEST_CASE("filter table problems are reported") {
    auto w = make_random_weights(tiny(), 11);
    w.header.filters[0].gain_limit = -1.0f;
    w.header.filters[1].taps = 99;
    const auto r = validate(w);
    CHECK(has_failure(r, "consistency", w.header.filters[0].name));
    CHECK(has_failure(r, "consistency", w.header.filters[1].name));
  }

  TEST_CASE("report serializes to JSON") {
    auto w = make_random_weights(tiny(), 12);
    w.find("conv1.w")->data[0] = std::nanf("");
    const auto j = nlohmann::json::parse(validate(w).to_json());
    CHECK(j["ok"] == false);
    REQUIRE(j["failures"].size() == 1);
    CHECK(j["failures"][0]["kind"] == "nonfinite");
    CHECK(j["failures"][0]["tensor"] == "conv1.w");
  }

  TEST_CASE("a validated model always instantiates") {
    Rng rng(13);
    std::uniform_int_distribution<int> pick(0, 5);
    int accepted = 0;
    for (int trial = 0; trial < 300; ++trial) {
      const auto cfg = trial % 2 ? tiny() : tiny(Variant::Lace);
      auto w = make_random_weights(cfg, static_cast<std::uint64_t>(trial));
      std::uniform_int_distribution<std::size_t> which(0, w.tensors.size() - 1);
      auto& t = w.tensors[which(rng)];
      switch (pick(rng)) {
        case 0: t.data[0] = std::nanf(""); break;
        case 1: t.shape.push_back(1); break;
        case 2: t.shape[0] += 1; t.data.resize(t.numel()); break;
        case 3: w.header.n_h += 1; break;
        case 4: w.header.filters.pop_back(); break;
        default: break;
      }
      const auto r = validate(w);
      if (r.ok()) {
        ++accepted;
        CHECK_NOTHROW((void)Model::from_weights(w));
      } else {
        CHECK_THROWS_AS((void)Model::from_weights(w), ValidationError);
      }
    }
    CHECK(accepted > 0);
  }
}

TEST_SUITE("test vectors and features") {
  TEST_CASE("test vectors round-trip") {
    Rng rng(14);
    std::vector<TestVector> vs(3);
    for (auto& v : vs) {
      v.features = testing::random_frames(rng, 8);
      v.input = testing::uniform(rng, 8 * kFrameSize);
      v.expected = testing::uniform(rng, 8 * kFrameSize);
      v.tolerance = 2e-4f;
    }
    const auto path = temp_path("vectors.nlv");
    save_test_vectors(vs, path);
    CHECK(load_test_vectors(path) == vs);
    std::filesystem::remove(path);
  }

  TEST_CASE("inconsistent vector lengths are rejected") {
    Rng rng(15);
    TestVector v;
    v.features = testing::random_frames(rng, 4);
    v.input = testing::uniform(rng, 4 * kFrameSize - 1);
    v.expected = v.input;
    const std::vector<TestVector> vs{v};
    CHECK_THROWS_AS(save_test_vectors(vs, temp_path("bad.nlv")), ContractViolation);
  }

  TEST_CASE("feature sidecar round-trips") {
    Rng rng(16);
    const auto frames = testing::random_frames(rng, 13);
    const auto path = temp_path("features.nlf");
    save_features(frames, path);
    CHECK(load_features(path) == frames);
    std::filesystem::remove(path);
  }

  TEST_CASE("weights file is not a feature file") {
    const auto path = temp_path("not_features.nlw");
    save_weights(make_random_weights(tiny(), 17), path);
    CHECK_THROWS_AS(load_features(path), FormatError);
    std::filesystem::remove(path);
  }
}
