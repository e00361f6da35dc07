#pragma once

#include "duel/errors.hpp"
#include "duel/experiment.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace duel::cli {

/// Invalid or unknown configuration entry. The message names the dotted key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct GridSpec {
  std::vector<Policy> policies;      // empty: the single memory.policy
  std::vector<double> bias_factors;  // empty: the single stream.bias_factor
  int num_seeds = 1;                 // run seeds are seed, seed + 1, ...
  int threads = 1;
};

struct VerifySpec {
  int safety_trials = 10000;
  double safety_noise_sigma = 0.05;
  int threshold_trials = 1000;
  double gradient_tolerance = 1e-5;
  double stationarity_tolerance = 1e-9;
  double fd_epsilon = 1e-5;
  int drift_steps = 10;
  double drift_lr = 0.1;
};

struct BenchSpec {
  std::vector<int> ks = {256, 1024, 2048};
  int dim = 256;
  int precheck_ops = 10000;
  int timed_ops = 2000;
  int full_ops = 3;
  double min_speedup = 10.0;
  int floor_min_k = 2048;  // the speedup floor applies from this k up
  double equivalence_tolerance = 1e-6;
};

/// Declarative run document. Every field has a default except the seed,
/// which commands that produce stochastic artifacts require.
struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::string output_dir = "out";

  int num_classes = 10;
  double bias_factor = 1.0;
  int dominant_class = 0;
  int ambient_dim = 32;
  int embed_dim = 16;
  std::optional<double> prototype_separation;
  double noise_sigma = 0.05;
  int steps = 10000;
  int batch = 32;

  MemoryOptions memory;
  bool eviction_log = false;

  std::string score_kind = "linear";
  double score_tau = 1.0;

  LossKind loss = LossKind::info_nce;
  double temperature = 0.7;
  double lr = 1.0;
  int eval_every = 500;
  bool batch_negatives = false;
  int probe_per_class = 100;

  GridSpec grid;
  VerifySpec verify;
  BenchSpec bench;
  bool plot_svg = true;

  /// Experiment for one grid cell.
  ExperimentConfig experiment(Policy policy, double bias_factor, std::uint64_t seed) const;
  ExperimentConfig experiment() const;
  std::uint64_t require_seed() const;
};

/// Sets one dotted key from YAML text ("0.5", "fifo", "[1, 27]").
/// Throws ConfigError for unknown keys and malformed values.
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);
/// "key=value" form of apply_override.
void apply_assignment(RunConfig& cfg, const std::string& assignment);

/// Strict parse: every leaf must be a known key.
RunConfig parse_config(const std::string& yaml_text);
RunConfig load_config(const std::string& path);

/// Fully resolved document; parse_config(to_yaml(c)) reproduces c.
std::string to_yaml(const RunConfig& cfg);

std::string to_string(Maintenance m);
std::string to_string(TieBreak t);
Maintenance parse_maintenance(std::string_view name);
TieBreak parse_tie_break(std::string_view name);

}  // namespace duel::cli
