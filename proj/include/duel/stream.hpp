#pragma once

#include "duel/nce.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace duel {

struct StreamConfig {
  BiasSpec bias = BiasSpec::from_bias_factor(10, 1.0);
  int ambient_dim = 32;
  int embed_dim = 16;
  // Target cosine between class prototypes; unset means -1/(C-1).
  std::optional<double> prototype_separation;
  double noise_sigma = 0.05;
  int steps = 10000;
  int batch = 32;
  std::uint64_t seed = 0;

  double separation() const;
  /// Throws InvalidArgument on a broken invariant.
  void validate() const;
};

/// Deterministic 64-bit seed derived from (seed, tag), so independent
/// random streams of one run never share an engine.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

struct StreamDraw {
  Eigen::VectorXd anchor;
  Eigen::VectorXd positive;
  int label = 0;  // hidden class
};

/// i.i.d. draws of class c ~ rho and two independent noisy views
/// mu_c + sigma * N(0, I) of the class prototype mu_c.
class BiasedStream {
 public:
  BiasedStream(const StreamConfig& cfg, std::uint64_t seed);

  StreamDraw next();
  int draw_class();
  Eigen::VectorXd view(int label);

  const std::vector<Eigen::VectorXd>& prototypes() const noexcept { return prototypes_; }

 private:
  std::vector<Eigen::VectorXd> prototypes_;
  std::vector<double> cumulative_;
  double sigma_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

/// The training stream of a run, seeded from cfg.seed. Throws
/// FrameInfeasible when the prototype separation cannot be realized.
BiasedStream gen_stream(const StreamConfig& cfg);

}  // namespace duel
