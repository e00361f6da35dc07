#include "duel/stream.hpp"

#include "duel/errors.hpp"
#include "duel/geometry.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace duel {

double StreamConfig::separation() const {
  return prototype_separation.value_or(simplex_gamma(bias.num_classes));
}

void StreamConfig::validate() const {
  bias.validate();
  if (embed_dim < 2) throw InvalidArgument(fmt::format("embed_dim {} < 2", embed_dim));
  if (ambient_dim < embed_dim) {
    throw InvalidArgument(
        fmt::format("ambient_dim {} must be >= embed_dim {}", ambient_dim, embed_dim));
  }
  if (!(noise_sigma >= 0.0)) throw InvalidArgument("noise_sigma must be >= 0");
  if (batch < 1) throw InvalidArgument("batch must be >= 1");
  if (steps < 0) throw InvalidArgument("steps must be >= 0");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  // splitmix64 over the combined state
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

BiasedStream::BiasedStream(const StreamConfig& cfg, std::uint64_t seed)
    : sigma_(cfg.noise_sigma), rng_(seed) {
  cfg.validate();
  const EtfFrame frame = make_etf(cfg.bias.num_classes, cfg.ambient_dim, cfg.separation());
  for (const auto& z : frame.class_vectors) prototypes_.push_back(z.coords());

  double acc = 0.0;
  for (int c = 0; c < cfg.bias.num_classes; ++c) {
    acc += cfg.bias.rho(c);
    cumulative_.push_back(acc);
  }
  cumulative_.back() = 1.0;
}

int BiasedStream::draw_class() {
  const double u = unit_(rng_);
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative_.begin(),
                                                   static_cast<std::ptrdiff_t>(cumulative_.size()) - 1));
}

Eigen::VectorXd BiasedStream::view(int label) {
  Eigen::VectorXd x = prototypes_.at(static_cast<std::size_t>(label));
  if (sigma_ > 0.0) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += sigma_ * gauss_(rng_);
  }
  return x;
}

StreamDraw BiasedStream::next() {
  StreamDraw d;
  d.label = draw_class();
  d.anchor = view(d.label);
  d.positive = view(d.label);
  return d;
}

BiasedStream gen_stream(const StreamConfig& cfg) { return BiasedStream(cfg, derive_seed(cfg.seed, 1)); }

}  // namespace duel
