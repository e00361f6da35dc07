#pragma once

#include "duel/encoder.hpp"
#include "duel/memory.hpp"
#include "duel/nce.hpp"
#include "duel/scoring.hpp"
#include "duel/stream.hpp"

#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace duel {

struct ExperimentConfig {
  StreamConfig stream;
  MemoryOptions memory;
  ScoreFunction score = ScoreFunction::linear();
  LossKind loss = LossKind::info_nce;
  double temperature = 0.7;
  double lr = 1.0;
  int eval_every = 500;
  bool batch_negatives = false;
  int probe_per_class = 100;

  void validate() const;
};

/// One row per evaluation point. loss and collision_rate are means over the
/// steps since the previous row; the rest are snapshots.
struct RunMetrics {
  std::vector<int> step;
  std::vector<double> loss;
  std::vector<double> intra_sim;
  std::vector<double> inter_sim;
  std::vector<double> mem_entropy;
  std::vector<double> mem_max_frac;
  std::vector<double> collision_rate;

  std::size_t size() const noexcept { return step.size(); }
};

inline constexpr const char* kRunMetricsHeader =
    "step,loss,intra_sim,inter_sim,mem_entropy,mem_max_frac,collision_rate";

void write_metrics_csv(std::ostream& out, const RunMetrics& metrics);

/// "<policy>_<bias>x_<seed>", e.g. "duel-naive_27x_3".
std::string run_file_stem(Policy policy, double bias_factor, std::uint64_t seed);

/// Read-only view of the training state handed to an observer each step,
/// before the weight update is applied.
struct StepView {
  int step;
  const Encoder& encoder;
  std::span<const StreamDraw> batch;
  const Eigen::MatrixXd& negatives;
  const EncoderGradient& gradient;
};

struct ExperimentHooks {
  std::function<void(const StepView&)> on_step;
  EvictionCsvWriter* eviction_log = nullptr;
};

/// Intra- and inter-class mean cosine over a labelled probe set.
struct ProbeSimilarity {
  double intra = 0.0;
  double inter = 0.0;
};
ProbeSimilarity probe_similarity(const Encoder& enc, std::span<const StreamDraw> probe,
                                 int num_classes);

/// Runs the training loop: the memory is first filled with `capacity` stream
/// samples, then every step draws a batch, takes one SGD step on the
/// contrastive loss against the memory's negatives (stop-gradient), and
/// feeds each anchor through the memory's replacement policy.
/// Throws Divergence when the loss becomes non-finite.
RunMetrics run_experiment(const ExperimentConfig& cfg, const ExperimentHooks& hooks = {});

}  // namespace duel
