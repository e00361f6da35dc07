#include "duel/scoring.hpp"

#include "duel/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace duel {

ScoreFunction::ScoreFunction(ScoreKind kind, double tau) : kind_(kind), tau_(tau) {
  if (kind_ == ScoreKind::gaussian) gaussian_floor_ = std::exp(-4.0 / tau_);
}

ScoreFunction ScoreFunction::gaussian(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw InvalidArgument(fmt::format("gaussian score: tau must be positive, got {}", tau));
  }
  return ScoreFunction(ScoreKind::gaussian, tau);
}

ScoreFunction ScoreFunction::parse(std::string_view name, double tau) {
  if (name == "linear") return linear();
  if (name == "gaussian") return gaussian(tau);
  if (name == "quadratic") return quadratic();
  throw InvalidArgument(fmt::format("unknown score function '{}'", name));
}

std::string ScoreFunction::name() const {
  switch (kind_) {
    case ScoreKind::linear:
      return "linear";
    case ScoreKind::gaussian:
      return "gaussian";
    case ScoreKind::quadratic:
      return "quadratic";
  }
  return "?";
}

double ScoreFunction::operator()(double s) const {
  if (!(s >= -1.0 - kCosineClampBand && s <= 1.0 + kCosineClampBand)) {
    throw OutOfRange(fmt::format("score: cosine {:.17g} outside [-1, 1]", s));
  }
  s = std::clamp(s, -1.0, 1.0);
  switch (kind_) {
    case ScoreKind::linear:
      return (s + 1.0) / 2.0;
    case ScoreKind::quadratic: {
      const double half = (s + 1.0) / 2.0;
      return half * half;
    }
    case ScoreKind::gaussian: {
      const double raw = std::exp(-((s - 1.0) * (s - 1.0)) / tau_);
      return std::clamp((raw - gaussian_floor_) / (1.0 - gaussian_floor_), 0.0, 1.0);
    }
  }
  return 0.0;
}

double collision_prob(const UnitVector& z_i, const UnitVector& z_j, const ScoreFunction& h) {
  return h(z_i.dot(z_j));
}

double duplicate_count(std::size_t j, std::span<const UnitVector> pool, const ScoreFunction& h) {
  if (j >= pool.size()) {
    throw OutOfRange(fmt::format("duplicate_count: index {} outside pool of {}", j, pool.size()));
  }
  double n = 0.0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (i != j) n += h(pool[i].dot(pool[j]));
  }
  return n;
}

double pool_diversity(std::span<const UnitVector> pool, const ScoreFunction& h) {
  // Neumaier summation over i < j; the ordered-pair sum is twice that.
  double sum = 0.0;
  double carry = 0.0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      const double term = 1.0 - h(pool[i].dot(pool[j]));
      const double t = sum + term;
      if (std::abs(sum) >= std::abs(term)) {
        carry += (sum - t) + term;
      } else {
        carry += (term - t) + sum;
      }
      sum = t;
    }
  }
  return 2.0 * (sum + carry);
}

namespace {

void require_strictly_increasing(const ScoreFunction& h) {
  constexpr int kGrid = 2048;
  double prev = h(-1.0);
  for (int i = 1; i <= kGrid; ++i) {
    const double s = -1.0 + 2.0 * i / kGrid;
    const double v = h(s);
    if (!(v > prev)) {
      throw NonInvertible(fmt::format(
          "threshold: {} score (tau={}) is flat near s={:.6f}; no unique alpha*", h.name(),
          h.tau(), s));
    }
    prev = v;
  }
}

}  // namespace

double distinguishability_threshold(const ScoreFunction& h, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw OutOfRange(fmt::format("threshold: alpha {} outside [0, 1]", alpha));
  }
  require_strictly_increasing(h);
  if (alpha == 0.0) return -1.0;
  if (alpha == 1.0) return 1.0;

  double s = 0.0;
  switch (h.kind()) {
    case ScoreKind::linear:
      s = 2.0 * alpha - 1.0;
      break;
    case ScoreKind::quadratic:
      s = 2.0 * std::sqrt(alpha) - 1.0;
      break;
    case ScoreKind::gaussian: {
      // Invariant: h(lo) < alpha <= h(hi).
      double lo = -1.0;
      double hi = 1.0;
      while (true) {
        const double mid = lo + (hi - lo) / 2.0;
        if (mid <= lo || mid >= hi) break;
        if (h(mid) >= alpha) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      s = hi;
      break;
    }
  }
  s = std::clamp(s, -1.0, 1.0);
  // Snap to the smallest double that still satisfies h(s) >= alpha.
  while (s < 1.0 && h(s) < alpha) s = std::nextafter(s, 2.0);
  while (s > -1.0 && h(std::nextafter(s, -2.0)) >= alpha) s = std::nextafter(s, -2.0);
  return s;
}

}  // namespace duel
