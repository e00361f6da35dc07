#pragma once

#include "duel/geometry.hpp"

#include <span>
#include <string>
#include <string_view>

namespace duel {

enum class ScoreKind { linear, gaussian, quadratic };

/// Monotone map h from cosine similarity in [-1, 1] to a collision
/// probability in [0, 1], with h(-1) = 0 and h(1) = 1 exactly.
///
///   linear     (s + 1) / 2
///   gaussian   (exp(-(s-1)^2 / tau) - exp(-4 / tau)) / (1 - exp(-4 / tau))
///   quadratic  ((s + 1) / 2)^2
///
/// Inputs within 1e-9 outside [-1, 1] are clamped; anything further out is
/// an OutOfRange error, since it means an embedding was not normalized.
class ScoreFunction {
 public:
  static ScoreFunction linear() { return ScoreFunction(ScoreKind::linear, 1.0); }
  static ScoreFunction gaussian(double tau = 1.0);
  static ScoreFunction quadratic() { return ScoreFunction(ScoreKind::quadratic, 1.0); }
  /// Accepts "linear", "gaussian", "quadratic".
  static ScoreFunction parse(std::string_view name, double tau = 1.0);

  double operator()(double cosine) const;

  ScoreKind kind() const noexcept { return kind_; }
  double tau() const noexcept { return tau_; }
  std::string name() const;

 private:
  ScoreFunction(ScoreKind kind, double tau);

  ScoreKind kind_;
  double tau_;
  double gaussian_floor_ = 0.0;  // exp(-4/tau), the raw kernel value at s = -1
};

inline constexpr double kCosineClampBand = 1e-9;

/// h(z_i . z_j). Throws ShapeMismatch on unequal dimension.
double collision_prob(const UnitVector& z_i, const UnitVector& z_j, const ScoreFunction& h);

/// Expected number of duplicates of slot j: sum over i != j of h(z_i . z_j).
/// Throws OutOfRange when j is not a valid index.
double duplicate_count(std::size_t j, std::span<const UnitVector> pool, const ScoreFunction& h);

/// Sum over all ordered pairs (i, j) of 1 - h(z_i . z_j). Self-pairs add 0.
/// Accumulated with compensated summation.
double pool_diversity(std::span<const UnitVector> pool, const ScoreFunction& h);

/// The cosine alpha* with h(s) >= alpha  <=>  s >= alpha*.
///
/// alpha* is the smallest double with h(alpha*) >= alpha (alpha = 0 maps to
/// -1 and alpha = 1 to 1). Closed form for linear and quadratic, bisection
/// for gaussian, then snapped to the exact floating-point boundary.
/// Throws NonInvertible when h is not strictly increasing in floating point,
/// OutOfRange when alpha is outside [0, 1].
double distinguishability_threshold(const ScoreFunction& h, double alpha);

}  // namespace duel
