#pragma once

#include "duel/geometry.hpp"

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace duel {

/// Class marginal with one dominant class: rho(c_max) = rho_max and every
/// other class gets rho_min = (1 - rho_max) / (C - 1).
struct BiasSpec {
  int num_classes = 2;
  int c_max = 0;
  double rho_max = 0.5;

  static BiasSpec from_rho_max(int num_classes, double rho_max, int c_max = 0);
  /// rho_max / rho_min = factor, i.e. rho_max = factor / (factor + C - 1).
  static BiasSpec from_bias_factor(int num_classes, double factor, int c_max = 0);

  double rho_min() const { return (1.0 - rho_max) / (num_classes - 1); }
  double bias_factor() const { return rho_max / rho_min(); }
  double rho(int c) const { return c == c_max ? rho_max : rho_min(); }
  /// Throws InvalidArgument when an invariant does not hold.
  void validate() const;
};

/// Smallest integer class counts realizing the spec exactly: counts[c] / k
/// equals rho(c) within 1e-9. Throws InvalidArgument if no population of at
/// most 100000 samples does.
std::vector<int> exact_population(const BiasSpec& spec);

enum class LossKind { info_nce, logistic };
std::string to_string(LossKind kind);
LossKind parse_loss(std::string_view name);

/// One anchor with its positive and k negatives (columns of `negatives`).
/// Losses do not renormalize, so perturbed vectors can be fed directly.
struct ContrastiveBatch {
  Eigen::VectorXd anchor;
  Eigen::VectorXd positive;
  Eigen::MatrixXd negatives;
  double temperature = 1.0;
};

/// log(1 + sum_i exp(-v_i)) with v_i = anchor . (positive - negative_i).
double logistic_nce_loss(const Eigen::Ref<const Eigen::VectorXd>& anchor,
                         const Eigen::Ref<const Eigen::VectorXd>& positive,
                         const Eigen::Ref<const Eigen::MatrixXd>& negatives);
double logistic_nce_loss(const ContrastiveBatch& batch);

/// -log softmax of the positive logit among {a.p, a.n_1, ..., a.n_k} / tau.
double info_nce_loss(const Eigen::Ref<const Eigen::VectorXd>& anchor,
                     const Eigen::Ref<const Eigen::VectorXd>& positive,
                     const Eigen::Ref<const Eigen::MatrixXd>& negatives, double temperature);
double info_nce_loss(const ContrastiveBatch& batch);

/// Loss value and its gradient with respect to every input embedding.
struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd d_anchor;
  Eigen::VectorXd d_positive;
  Eigen::MatrixXd d_negatives;
};

LossGradient logistic_nce_gradient(const Eigen::Ref<const Eigen::VectorXd>& anchor,
                                   const Eigen::Ref<const Eigen::VectorXd>& positive,
                                   const Eigen::Ref<const Eigen::MatrixXd>& negatives);
LossGradient info_nce_gradient(const Eigen::Ref<const Eigen::VectorXd>& anchor,
                               const Eigen::Ref<const Eigen::VectorXd>& positive,
                               const Eigen::Ref<const Eigen::MatrixXd>& negatives,
                               double temperature);

enum class AnchorCase { dominant, minority };
std::string to_string(AnchorCase c);

/// Closed-form gradient of the population loss for an anchor sitting on an
/// exact frame vertex:
///   grad = coeff_self * z_i + coeff_max * z_max + coeff_resultant * sum_c z_c.
///
/// coeff_self and coeff_max are
///   dominant:  k P- (-1 + rho_max - rho_min),  0
///   minority:  -k P-,                          k P- (rho_max - rho_min)
/// with P- = e^gamma / (k (rho e + (1 - rho) e^gamma)) and rho the anchor's
/// class marginal. coeff_resultant = k rho_min P- multiplies the frame
/// resultant, which vanishes at gamma = -1/(C-1); at any other gamma the
/// term is needed for the formula to be exact.
struct EtfGradient {
  double coeff_self = 0.0;
  double coeff_max = 0.0;
  double coeff_resultant = 0.0;
  AnchorCase anchor_case = AnchorCase::dominant;

  Eigen::VectorXd assemble(const EtfFrame& frame, int anchor_class, int c_max) const;
};

EtfGradient analytic_etf_gradient(const BiasSpec& spec, int k, double gamma, AnchorCase c);

/// Evaluates
///   dL_i/dz_i = (1/tau) [ sum_{p in P(i)} z_p (P_ip - X_ip) + sum_{n in N(i)} z_n P_in ]
/// on a finite population holding class_counts[c] copies of class_vectors[c]
/// (k = sum of counts samples besides the anchor), anchor at
/// class_vectors[anchor_class]. X_ip = 1 / |P(i)|.
Eigen::VectorXd population_infonce_gradient(std::span<const Eigen::VectorXd> class_vectors,
                                            std::span<const int> class_counts, int anchor_class,
                                            double temperature);
Eigen::VectorXd population_infonce_gradient(const EtfFrame& frame,
                                            std::span<const int> class_counts, int anchor_class,
                                            double temperature);

/// The loss whose gradient the formula above is: the mean over positives p
/// of info_nce_loss(anchor, z_p, population minus p). `anchor` is free.
double population_infonce_loss(const Eigen::VectorXd& anchor,
                               std::span<const Eigen::VectorXd> class_vectors,
                               std::span<const int> class_counts, int anchor_class,
                               double temperature);

/// Central differences per ambient coordinate, no renormalization.
/// Throws InvalidArgument unless epsilon is in [1e-8, 1e-3].
Eigen::VectorXd finite_diff_gradient(const std::function<double(const Eigen::VectorXd&)>& loss,
                                     const Eigen::VectorXd& z, double epsilon);

struct DriftReport {
  // dot_with_max[t][c] = z_c . z_max after t steps; row 0 is the start.
  std::vector<std::vector<double>> dot_with_max;
  std::vector<Eigen::VectorXd> final_vectors;
  // Per class: z_c . z_max strictly decreased at every step (false for c_max).
  std::vector<bool> minority_decreasing;
  // max over steps and classes c != c_max of |z_c . z_max - gamma|.
  double max_abs_drift = 0.0;
};

/// Full-batch gradient descent on every class vector at once using the
/// population gradient (tau = 1), each step followed by renormalization.
/// Population counts come from exact_population(spec).
DriftReport etf_drift(const EtfFrame& frame, const BiasSpec& spec, double lr, int steps);

}  // namespace duel
