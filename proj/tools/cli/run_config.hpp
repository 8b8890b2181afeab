#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "json.hpp"

#include "gpstruct/kernels.hpp"
#include "gpstruct/predict.hpp"
#include "gpstruct/sampler.hpp"

namespace gpstruct::cli {

/// Parameters of the synthetic Markov-chain task generator.
struct SynthSpec {
  int labels = 2;
  std::size_t n_train = 20;
  std::size_t n_test = 20;
  std::size_t length = 10;
  /// Lengths are uniform on [length, length_max]; 0 means fixed length.
  std::size_t length_max = 0;
  /// "onehot": x = signal * e_y + noise * z. "gaussian": x = signal * mu_y +
  /// noise * z with seeded class means mu_y ~ N(0, I).
  std::string features = "onehot";
  double signal = 1.0;
  double noise = 0.2;
  std::size_t noise_dims = 0;
  /// "uniform", "sticky:P", or explicit rows "a,b;c,d".
  std::string transitions = "uniform";

  friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

/// Everything a command needs. Serialized as a flat JSON object whose keys
/// are dotted names such as "kernel.type" or "chain.thin".
struct RunConfig {
  std::string train_path;
  std::string test_path;
  bool test_labeled = true;
  std::string store_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;

  KernelConfig kernel;
  bool gamma_median = false;
  std::size_t median_max_pairs = 100'000;

  ChainConfig chain = [] {
    ChainConfig c;
    c.n_iterations = 1000;
    return c;
  }();

  PredictScheme scheme = PredictScheme::kFstarMap;
  int n_fstar = 1;
  DecodeLoss loss = DecodeLoss::kHamming;
  bool write_marginals = false;

  std::string task = "task";
  int n_splits = 5;
  std::size_t train_size = 0;
  std::size_t test_size = 0;

  SynthSpec synth;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Applies the keys of `doc` on top of `config`. Unknown keys and ill-typed
/// values raise Error(kConfig).
void apply_json(RunConfig& config, const nlohmann::json& doc);
RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const RunConfig& config);

RunConfig load_config_file(const std::string& path);
void write_config_file(const RunConfig& config, const std::string& path);

}  // namespace gpstruct::cli
