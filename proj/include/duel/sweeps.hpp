#pragma once

#include "duel/memory.hpp"
#include "duel/nce.hpp"
#include "duel/scoring.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace duel {

enum class GammaConvention { simplex, reciprocal };  // -1/(C-1) and -1/C
std::string to_string(GammaConvention g);
double gamma_for(GammaConvention g, int num_classes);

// ---------------------------------------------------------------------------
// Replacement safety on exact frame pools.

struct SafetySweepConfig {
  int trials = 10000;
  std::vector<ScoreFunction> scores = {ScoreFunction::linear(), ScoreFunction::gaussian(1.0),
                                       ScoreFunction::quadratic()};
  std::vector<int> class_counts = {2, 3, 5, 10};
  std::vector<GammaConvention> gammas = {GammaConvention::simplex, GammaConvention::reciprocal};
  std::vector<int> pool_sizes = {2, 3, 4, 8, 16, 32};
  TieBreak tie_break = TieBreak::similarity_then_oldest;
  double noise_sigma = 0.05;  // perturbed-pool pass, reported only
  double tolerance = 1e-12;
  std::uint64_t seed = 0;
};

struct SafetySweepResult {
  std::string score;
  int trials = 0;
  int violations = 0;
  double min_delta = 0.0;  // smallest p_d(after) - p_d(before)
  int indistinguishable = 0;  // incoming class == evicted class
  double indistinguishable_max_abs_delta = 0.0;
  int evicted_non_majority = 0;  // evicted slot's class was not a largest class
  int noisy_trials = 0;
  int noisy_violations = 0;
  std::string first_violation;  // empty when none
};

/// Random pools placed exactly on frame vertices with random class
/// multiplicities, one incoming sample on a random vertex, one naive-MCP
/// replacement each. Every exact trial is checked against
/// p_d(after) >= p_d(before) - tolerance; the perturbed pass only counts.
std::vector<SafetySweepResult> theorem1_sweep(const SafetySweepConfig& cfg);

// ---------------------------------------------------------------------------
// Gradient oracles on the biased frame.

struct GradientGridConfig {
  std::vector<int> class_counts = {3, 5, 10};
  std::vector<double> bias_factors = {1.0, 3.0, 9.0, 27.0};
  std::vector<GammaConvention> gammas = {GammaConvention::reciprocal, GammaConvention::simplex};
  double fd_epsilon = 1e-5;
};

struct GradientCell {
  AnchorCase anchor_case = AnchorCase::dominant;
  int num_classes = 0;
  double bias_factor = 1.0;
  GammaConvention convention = GammaConvention::simplex;
  double gamma = 0.0;
  int population = 0;
  EtfGradient analytic;
  double rel_err_analytic_population = 0.0;
  double rel_err_population_fd = 0.0;
  double rel_err_analytic_fd = 0.0;
  double tangential_norm = 0.0;  // of the population gradient at z_i

  double oracle_rel_err() const;
};

/// One cell per (case, C, bias, gamma). The minority anchor is class 1.
std::vector<GradientCell> gradient_grid(const GradientGridConfig& cfg);

/// case,num_classes,bias_factor,gamma,coeff_self,coeff_max,oracle_rel_err,tangential_norm
void write_gradient_csv(std::ostream& out, const std::vector<GradientCell>& cells);

double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// ---------------------------------------------------------------------------
// Drift away from the frame under a biased marginal.

struct DriftGridConfig {
  std::vector<int> class_counts = {3, 5, 10};
  std::vector<double> bias_factors = {1.0, 3.0, 9.0, 27.0};
  std::vector<GammaConvention> gammas = {GammaConvention::reciprocal, GammaConvention::simplex};
  int steps = 10;
  double lr = 0.1;
};

struct DriftCell {
  int num_classes = 0;
  double bias_factor = 1.0;
  GammaConvention convention = GammaConvention::simplex;
  double gamma = 0.0;
  DriftReport report;
  bool all_minority_decreasing = false;
  bool stationary = false;  // max |z_c . z_max - gamma| <= 1e-9
  double mean_minority_drop = 0.0;  // mean of z_c.z_max(0) - z_c.z_max(steps)
};

std::vector<DriftCell> observation1_report(const DriftGridConfig& cfg);

/// num_classes,bias_factor,gamma,class,step,dot_with_max
void write_drift_csv(std::ostream& out, const std::vector<DriftCell>& cells);

// ---------------------------------------------------------------------------
// Threshold equivalence.

struct ThresholdResult {
  std::string score;
  int trials = 0;
  int equivalence_failures = 0;
  double max_inversion_error = 0.0;  // max |h(alpha*) - alpha|
  std::string first_failure;  // empty when none
};

std::vector<ThresholdResult> threshold_sweep(const std::vector<ScoreFunction>& scores, int trials,
                                             std::uint64_t seed);

}  // namespace duel
