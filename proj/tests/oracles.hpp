#pragma once

// Brute-force reference implementations. Written from the definitions with
// plain loops and long double accumulation, sharing no code with the library.

#include "duel/geometry.hpp"
#include "duel/scoring.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace oracle {

inline long double dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  long double s = 0.0L;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return s;
}

inline long double h(duel::ScoreKind kind, long double s, long double tau = 1.0L) {
  if (s > 1.0L) s = 1.0L;
  if (s < -1.0L) s = -1.0L;
  switch (kind) {
    case duel::ScoreKind::linear:
      return (s + 1.0L) / 2.0L;
    case duel::ScoreKind::quadratic:
      return (s + 1.0L) * (s + 1.0L) / 4.0L;
    case duel::ScoreKind::gaussian: {
      const long double lo = std::exp(-4.0L / tau);
      return (std::exp(-(s - 1.0L) * (s - 1.0L) / tau) - lo) / (1.0L - lo);
    }
  }
  return 0.0L;
}

inline long double h(const duel::ScoreFunction& f, long double s) { return h(f.kind(), s, f.tau()); }

inline double duplicate_count(std::size_t j, std::span<const duel::UnitVector> pool,
                              const duel::ScoreFunction& f) {
  long double n = 0.0L;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (i != j) n += h(f, dot(pool[i].coords(), pool[j].coords()));
  }
  return static_cast<double>(n);
}

inline double pool_diversity(std::span<const duel::UnitVector> pool, const duel::ScoreFunction& f) {
  long double p = 0.0L;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = 0; j < pool.size(); ++j) {
      p += 1.0L - h(f, dot(pool[i].coords(), pool[j].coords()));
    }
  }
  return static_cast<double>(p);
}

inline double mean_pairwise(std::span<const duel::UnitVector> a, std::span<const duel::UnitVector> b,
                            bool exclude_self) {
  long double s = 0.0L;
  long double n = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (exclude_self && i == j) continue;
      s += dot(a[i].coords(), b[j].coords());
      n += 1.0L;
    }
  }
  return static_cast<double>(s / n);
}

// -log( e^{a.p/t} / (e^{a.p/t} + sum_i e^{a.n_i/t}) ), no stabilization.
inline double info_nce(const Eigen::VectorXd& a, const Eigen::VectorXd& p, const Eigen::MatrixXd& negs,
                       double tau) {
  const long double pos = std::exp(dot(a, p) / tau);
  long double denom = pos;
  for (Eigen::Index i = 0; i < negs.cols(); ++i) denom += std::exp(dot(a, negs.col(i)) / tau);
  return static_cast<double>(-std::log(pos / denom));
}

inline double logistic_nce(const Eigen::VectorXd& a, const Eigen::VectorXd& p, const Eigen::MatrixXd& negs) {
  long double sum = 1.0L;
  for (Eigen::Index i = 0; i < negs.cols(); ++i) {
    sum += std::exp(-(dot(a, p) - dot(a, negs.col(i))));
  }
  return static_cast<double>(std::log(sum));
}

// Central differences over every entry of a matrix argument.
inline Eigen::MatrixXd fd_gradient(const std::function<double(const Eigen::MatrixXd&)>& f,
                                   const Eigen::MatrixXd& x, double eps) {
  Eigen::MatrixXd g(x.rows(), x.cols());
  Eigen::MatrixXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = probe.data()[i];
    probe.data()[i] = keep + eps;
    const double up = f(probe);
    probe.data()[i] = keep - eps;
    const double down = f(probe);
    probe.data()[i] = keep;
    g.data()[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

inline duel::UnitVector random_unit(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = g(rng);
  return duel::normalize(v);
}

inline std::vector<duel::UnitVector> random_pool(int k, int dim, std::mt19937_64& rng) {
  std::vector<duel::UnitVector> pool;
  for (int i = 0; i < k; ++i) pool.push_back(random_unit(dim, rng));
  return pool;
}

// Pool clustered around a few random centres, so similarities span [-1, 1].
inline std::vector<duel::UnitVector> clustered_pool(int k, int dim, int clusters, double sigma,
                                                    std::mt19937_64& rng) {
  std::vector<duel::UnitVector> centres = random_pool(clusters, dim, rng);
  std::uniform_int_distribution<int> pick(0, clusters - 1);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<duel::UnitVector> pool;
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd v = centres[static_cast<std::size_t>(pick(rng))].coords();
    for (int d = 0; d < dim; ++d) v[d] += g(rng);
    pool.push_back(duel::normalize(v));
  }
  return pool;
}

// Sum over classes of rho_c^2.
inline double iid_collision_rate(int num_classes, double bias_factor) {
  const double rho_min = 1.0 / (bias_factor + num_classes - 1);
  const double rho_max = bias_factor * rho_min;
  return rho_max * rho_max + (num_classes - 1) * rho_min * rho_min;
}

}  // namespace oracle
