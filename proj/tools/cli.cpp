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

#include "cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <json.hpp>
#include <optional>
#include <random>

#include "nolace/codec_sim.hpp"
#include "nolace/model.hpp"
#include "nolace/wav.hpp"
#include "nolace/weights_io.hpp"

namespace nolace::cli {
namespace {

// Failure that maps to exit code 1 with a plain message.
struct CommandFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProfileOptions {
  float noise = 0.3f;
  float tilt = 0.5f;
  float quant = 0.2f;
  int bitrate = 9;

  void add_to(CLI::App& app) {
    app.add_option("--noise", noise, "shaped noise strength in [0, 1]")->capture_default_str();
    app.add_option("--tilt", tilt, "noise spectral tilt in [0, 1]")->capture_default_str();
    app.add_option("--quant", quant, "quantization noise strength in [0, 1]")->capture_default_str();
    app.add_option("--bitrate", bitrate, "simulated bitrate in kb/s")
        ->check(CLI::IsMember({6, 9, 12, 20}))
        ->capture_default_str();
  }

  DegradationProfile profile() const {
    DegradationProfile p{noise, tilt, quant, bitrate};
    p.check();
    return p;
  }
};

// Pads to whole subframes with zeros.
std::vector<float> pad_to_subframes(std::vector<float> x) {
  x.resize((x.size() + kFrameSize - 1) / kFrameSize * kFrameSize, 0.0f);
  return x;
}

double rms_error(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = static_cast<double>(a[k]) - b[k];
    acc += d * d;
  }
  return a.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(a.size()));
}

Model load_model(const std::string& path) {
  const ModelWeights weights = load_weights(path);
  return Model::from_weights(weights);
}

ModelConfig config_for(const std::string& variant, int n_r, int n_h, int taps) {
  ModelConfig c = parse_variant(variant) == Variant::Lace ? ModelConfig::lace() : ModelConfig::nolace();
  c.n_r = n_r;
  c.n_h = n_h;
  c.comb_taps = taps;
  c.conv_taps = taps;
  return c;
}

}  // namespace

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("nolace");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("NOLACE_LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(env));
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Streaming LACE / NoLACE speech enhancement engine"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  // enhance
  std::string model_path, in_path, out_path, features_path;
  bool simulate = false;
  ProfileOptions profile_opts;
  auto* enhance = app.add_subcommand("enhance", "Enhance a 16 kHz mono PCM16 WAV file");
  enhance->add_option("--model", model_path, "weight file")->required()->check(CLI::ExistingFile);
  enhance->add_option("--in", in_path, "input WAV")->required();
  enhance->add_option("--out", out_path, "output WAV")->required();
  auto* feat_opt = enhance->add_option("--features", features_path, "feature sidecar file");
  auto* sim_opt = enhance->add_flag("--simulate", simulate, "derive features from the input with the codec simulator");
  feat_opt->excludes(sim_opt);
  profile_opts.add_to(*enhance);

  // degrade
  std::uint64_t seed = 1;
  auto* degrade_cmd = app.add_subcommand("degrade", "Add simulated codec noise to a WAV file");
  degrade_cmd->add_option("--in", in_path, "clean WAV")->required();
  degrade_cmd->add_option("--out", out_path, "degraded WAV")->required();
  degrade_cmd->add_option("--seed", seed, "noise seed")->capture_default_str();
  profile_opts.add_to(*degrade_cmd);

  // features
  std::string degraded_path;
  auto* features_cmd = app.add_subcommand("features", "Extract conditioning features into a sidecar file");
  features_cmd->add_option("--clean", in_path, "clean WAV (pitch and spectrum)")->required();
  features_cmd->add_option("--degraded", degraded_path, "degraded WAV (cepstrum and correlations); defaults to --clean");
  features_cmd->add_option("--out", out_path, "feature file")->required();
  profile_opts.add_to(*features_cmd);

  // flops
  std::string variant = "nolace";
  int n_r = 96, n_h = 256, taps = kDefaultTaps;
  bool json = false;
  auto* flops_cmd = app.add_subcommand("flops", "Itemized complexity of a model or configuration");
  auto* flops_model = flops_cmd->add_option("--model", model_path, "weight file")->check(CLI::ExistingFile);
  flops_cmd->add_option("--variant", variant, "lace or nolace")->excludes(flops_model)->capture_default_str();
  flops_cmd->add_option("--n-r", n_r, "reduced feature dimension")->excludes(flops_model)->capture_default_str();
  flops_cmd->add_option("--n-h", n_h, "latent dimension")->excludes(flops_model)->capture_default_str();
  flops_cmd->add_option("--taps", taps, "taps per adaptive filter")->excludes(flops_model)->capture_default_str();
  flops_cmd->add_flag("--json", json, "machine-readable output");

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "Check a weight file for completeness and consistency");
  validate_cmd->add_option("--model", model_path, "weight file")->required();
  validate_cmd->add_flag("--json", json, "machine-readable output");

  // gen-vectors
  std::string vectors_path;
  int count = 10, frames = 16;
  auto* gen_cmd = app.add_subcommand("gen-vectors", "Write parity test vectors computed by this engine");
  gen_cmd->add_option("--model", model_path, "weight file")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--out", vectors_path, "vector file")->required();
  gen_cmd->add_option("--count", count, "number of vectors")->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--frames", frames, "subframes per vector")->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--seed", seed, "random seed")->capture_default_str();

  // parity
  auto* parity_cmd = app.add_subcommand("parity", "Compare engine output against stored test vectors");
  parity_cmd->add_option("--model", model_path, "weight file")->required()->check(CLI::ExistingFile);
  parity_cmd->add_option("--vectors", vectors_path, "vector file")->required()->check(CLI::ExistingFile);

  // init
  std::string kind = "random";
  float scale = 1.0f;
  auto* init_cmd = app.add_subcommand("init", "Write an identity or random weight file");
  init_cmd->add_option("--out", out_path, "weight file")->required();
  init_cmd->add_option("--variant", variant, "lace or nolace")->capture_default_str();
  init_cmd->add_option("--kind", kind, "identity or random")->check(CLI::IsMember({"identity", "random"}))->capture_default_str();
  init_cmd->add_option("--seed", seed, "random seed")->capture_default_str();
  init_cmd->add_option("--scale", scale, "random weight scale")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (enhance->parsed()) {
      if (!simulate && features_path.empty()) {
        err << "usage error: enhance needs --features or --simulate\n";
        return kExitUsage;
      }
      const Model model = load_model(model_path);
      const std::vector<float> input = read_wav(in_path);
      const std::vector<float> padded = pad_to_subframes(input);
      const std::size_t needed = padded.size() / kFrameSize;
      std::vector<FeatureFrame> feats;
      if (simulate) {
        feats = extract_features(padded, padded, profile_opts.profile());
      } else {
        feats = load_features(features_path);
        if (feats.size() < needed) {
          throw CommandFailed("feature file has " + std::to_string(feats.size()) + " frames but the input needs " +
                              std::to_string(needed));
        }
        feats.resize(needed);
      }
      const auto start = std::chrono::steady_clock::now();
      auto y = enhance_stream(model, preemphasis(padded), feats);
      y = deemphasis(y);
      y.resize(input.size());
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      write_wav(out_path, y);
      spdlog::info("enhanced {:.2f} s of audio in {:.3f} s", static_cast<double>(input.size()) / kSampleRate, seconds);
      return kExitOk;
    }

    if (degrade_cmd->parsed()) {
      const auto x = read_wav(in_path);
      write_wav(out_path, degrade(x, profile_opts.profile(), seed));
      return kExitOk;
    }

    if (features_cmd->parsed()) {
      const auto clean = pad_to_subframes(read_wav(in_path));
      const auto degraded = degraded_path.empty() ? clean : pad_to_subframes(read_wav(degraded_path));
      if (degraded.size() != clean.size()) throw CommandFailed("clean and degraded files differ in length");
      save_features(extract_features(clean, degraded, profile_opts.profile()), out_path);
      return kExitOk;
    }

    if (flops_cmd->parsed()) {
      const ModelConfig cfg =
          model_path.empty() ? config_for(variant, n_r, n_h, taps) : config_from_header(load_weights(model_path).header);
      const FlopReport report = count_flops(cfg);
      if (json) {
        nlohmann::json j;
        j["variant"] = std::string(to_string(cfg.variant));
        j["total_mflops"] = report.total_mflops;
        j["parameters"] = report.parameters;
        for (const auto& s : report.stages) j["stages"].push_back({{"name", s.name}, {"mflops", s.mflops}, {"parameters", s.parameters}});
        out << j.dump(2) << "\n";
      } else {
        out << fmt::format("{:<16} {:>10} {:>12}\n", "stage", "MFLOPS", "parameters");
        for (const auto& s : report.stages) out << fmt::format("{:<16} {:>10.2f} {:>12}\n", s.name, s.mflops, s.parameters);
        out << fmt::format("{:<16} {:>10.2f} {:>12}\n", "total", report.total_mflops, report.parameters);
      }
      return kExitOk;
    }

    if (validate_cmd->parsed()) {
      const ValidationReport report = validate(load_weights(model_path));
      if (json) {
        out << report.to_json() << "\n";
      } else {
        for (const auto& f : report.failures) out << "FAIL [" << f.kind << "] " << f.message << "\n";
        for (const auto& w : report.warnings) out << "WARN [" << w.kind << "] " << w.message << "\n";
        out << (report.ok() ? "valid" : "invalid") << " (" << report.failures.size() << " failures, "
            << report.warnings.size() << " warnings)\n";
      }
      return report.ok() ? kExitOk : kExitFailure;
    }

    if (gen_cmd->parsed()) {
      const Model model = load_model(model_path);
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<float> sample(-0.5f, 0.5f), feature(-1.0f, 1.0f);
      std::uniform_int_distribution<int> lag(kMinPitchLag, kMaxPitchLag);
      std::bernoulli_distribution voiced(0.75);
      std::vector<TestVector> vectors(static_cast<std::size_t>(count));
      for (auto& v : vectors) {
        v.features.resize(static_cast<std::size_t>(frames));
        for (auto& f : v.features) {
          f.features.resize(static_cast<std::size_t>(model.config().n_f));
          for (auto& e : f.features) e = feature(rng);
          f.pitch_lag = voiced(rng) ? lag(rng) : 0;
        }
        v.input.resize(static_cast<std::size_t>(frames) * kFrameSize);
        for (auto& s : v.input) s = sample(rng);
        v.expected = enhance_stream(model, v.input, v.features);
      }
      save_test_vectors(vectors, vectors_path);
      out << "wrote " << vectors.size() << " vectors to " << vectors_path << "\n";
      return kExitOk;
    }

    if (parity_cmd->parsed()) {
      const Model model = load_model(model_path);
      const auto vectors = load_test_vectors(vectors_path);
      if (vectors.empty()) throw CommandFailed("vector file holds no test vectors");
      std::size_t failed = 0;
      for (std::size_t k = 0; k < vectors.size(); ++k) {
        const auto& v = vectors[k];
        const double rms = rms_error(enhance_stream(model, v.input, v.features), v.expected);
        const bool pass = std::isfinite(rms) && rms <= v.tolerance;
        failed += pass ? 0 : 1;
        out << fmt::format("vector {:>4}: rms {:.3e} (tolerance {:.1e}) {}\n", k, rms, v.tolerance, pass ? "PASS" : "FAIL");
      }
      out << (failed == 0 ? "PASS" : "FAIL") << ": " << vectors.size() - failed << "/" << vectors.size() << " vectors\n";
      return failed == 0 ? kExitOk : kExitFailure;
    }

    if (init_cmd->parsed()) {
      ModelConfig cfg = parse_variant(variant) == Variant::Lace ? ModelConfig::lace() : ModelConfig::nolace();
      const ModelWeights w = kind == "identity" ? make_identity_weights(cfg, seed) : make_random_weights(cfg, seed, scale);
      save_weights(w, out_path);
      return kExitOk;
    }
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace nolace::cli
