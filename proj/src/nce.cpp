#include "duel/nce.hpp"

#include "duel/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace duel {

BiasSpec BiasSpec::from_rho_max(int num_classes, double rho_max, int c_max) {
  BiasSpec spec{num_classes, c_max, rho_max};
  spec.validate();
  return spec;
}

BiasSpec BiasSpec::from_bias_factor(int num_classes, double factor, int c_max) {
  if (!(factor >= 1.0) || !std::isfinite(factor)) {
    throw InvalidArgument(fmt::format("bias factor must be >= 1, got {}", factor));
  }
  return from_rho_max(num_classes, factor / (factor + num_classes - 1), c_max);
}

void BiasSpec::validate() const {
  if (num_classes < 2) {
    throw InvalidArgument(fmt::format("bias: need at least 2 classes, got {}", num_classes));
  }
  if (c_max < 0 || c_max >= num_classes) {
    throw InvalidArgument(fmt::format("bias: dominant class {} out of range", c_max));
  }
  if (!(rho_max >= 1.0 / num_classes - 1e-12 && rho_max < 1.0)) {
    throw InvalidArgument(
        fmt::format("bias: rho_max {} outside [1/{}, 1)", rho_max, num_classes));
  }
}

std::vector<int> exact_population(const BiasSpec& spec) {
  spec.validate();
  for (int k = spec.num_classes; k <= 100000; ++k) {
    const double n_max = k * spec.rho_max;
    const double n_min = k * spec.rho_min();
    if (std::abs(n_max - std::round(n_max)) < 1e-9 && std::abs(n_min - std::round(n_min)) < 1e-9 &&
        std::round(n_min) >= 1.0) {
      std::vector<int> counts(spec.num_classes, static_cast<int>(std::round(n_min)));
      counts[spec.c_max] = static_cast<int>(std::round(n_max));
      return counts;
    }
  }
  throw InvalidArgument(
      fmt::format("bias: rho_max {} has no exact integer population", spec.rho_max));
}

std::string to_string(LossKind kind) {
  return kind == LossKind::info_nce ? "infonce" : "logistic";
}

LossKind parse_loss(std::string_view name) {
  if (name == "infonce") return LossKind::info_nce;
  if (name == "logistic") return LossKind::logistic;
  throw InvalidArgument(fmt::format("unknown loss '{}'", name));
}

std::string to_string(AnchorCase c) { return c == AnchorCase::dominant ? "dominant" : "minority"; }

namespace {

void check_shapes(const Eigen::Ref<const Eigen::VectorXd>& anchor,
                  const Eigen::Ref<const Eigen::VectorXd>& positive,
                  const Eigen::Ref<const Eigen::MatrixXd>& negatives) {
  if (positive.size() != anchor.size() ||
      (negatives.cols() > 0 && negatives.rows() != anchor.size())) {
    throw ShapeMismatch(fmt::format("contrastive loss: anchor {} positive {} negatives {}x{}",
                                    anchor.size(), positive.size(), negatives.rows(),
                                    negatives.cols()));
  }
}

void check_temperature(double temperature) {
  if (!(temperature > 0.0)) {
    throw InvalidArgument(fmt::format("temperature must be positive, got {}", temperature));
  }
}

}  // namespace

double logistic_nce_loss(const Eigen::Ref<const Eigen::VectorXd>& anchor,
                         const Eigen::Ref<const Eigen::VectorXd>& positive,
                         const Eigen::Ref<const Eigen::MatrixXd>& negatives) {
  return logistic_nce_gradient(anchor, positive, negatives).loss;
}

double logistic_nce_loss(const ContrastiveBatch& b) {
  return logistic_nce_loss(b.anchor, b.positive, b.negatives);
}

double info_nce_loss(const Eigen::Ref<const Eigen::VectorXd>& anchor,
                     const Eigen::Ref<const Eigen::VectorXd>& positive,
                     const Eigen::Ref<const Eigen::MatrixXd>& negatives, double temperature) {
  check_shapes(anchor, positive, negatives);
  check_temperature(temperature);
  if (negatives.cols() == 0) return 0.0;  // the positive is the whole softmax
  const double pos = anchor.dot(positive) / temperature;
  const Eigen::VectorXd neg = negatives.transpose() * anchor / temperature;
  const double top = std::max(pos, neg.maxCoeff());
  const double z = std::exp(pos - top) + (neg.array() - top).exp().sum();
  return top + std::log(z) - pos;
}

double info_nce_loss(const ContrastiveBatch& b) {
  return info_nce_loss(b.anchor, b.positive, b.negatives, b.temperature);
}

LossGradient logistic_nce_gradient(const Eigen::Ref<const Eigen::VectorXd>& anchor,
                                   const Eigen::Ref<const Eigen::VectorXd>& positive,
                                   const Eigen::Ref<const Eigen::MatrixXd>& negatives) {
  check_shapes(anchor, positive, negatives);
  LossGradient g;
  g.d_anchor = Eigen::VectorXd::Zero(anchor.size());
  g.d_positive = Eigen::VectorXd::Zero(anchor.size());
  g.d_negatives = Eigen::MatrixXd::Zero(anchor.size(), negatives.cols());
  if (negatives.cols() == 0) return g;

  // Terms of log(exp(0) + sum_i exp(-v_i)); q_i are their softmax weights.
  const double ap = anchor.dot(positive);
  const Eigen::VectorXd minus_v = (negatives.transpose() * anchor).array() - ap;
  const double top = std::max(0.0, minus_v.maxCoeff());
  const Eigen::ArrayXd e = (minus_v.array() - top).exp();
  const double z = std::exp(-top) + e.sum();
  g.loss = top + std::log(z);

  const Eigen::VectorXd q = (e / z).matrix();
  const double q_sum = q.sum();
  // d loss / d v_i = -q_i, v_i = a.p - a.n_i
  g.d_anchor = negatives * q - q_sum * positive;
  g.d_positive = -q_sum * anchor;
  g.d_negatives = anchor * q.transpose();
  return g;
}

LossGradient info_nce_gradient(const Eigen::Ref<const Eigen::VectorXd>& anchor,
                               const Eigen::Ref<const Eigen::VectorXd>& positive,
                               const Eigen::Ref<const Eigen::MatrixXd>& negatives,
                               double temperature) {
  check_shapes(anchor, positive, negatives);
  check_temperature(temperature);
  if (negatives.cols() == 0) {
    return LossGradient{0.0, Eigen::VectorXd::Zero(anchor.size()), Eigen::VectorXd::Zero(anchor.size()),
                        Eigen::MatrixXd::Zero(anchor.size(), 0)};
  }
  const double pos = anchor.dot(positive) / temperature;
  const Eigen::VectorXd neg = negatives.transpose() * anchor / temperature;
  const double top = std::max(pos, neg.maxCoeff());
  const double e_pos = std::exp(pos - top);
  const Eigen::ArrayXd e_neg = (neg.array() - top).exp();
  const double z = e_pos + e_neg.sum();

  LossGradient g;
  g.loss = top + std::log(z) - pos;
  const double w_pos = e_pos / z - 1.0;
  const Eigen::VectorXd w_neg = (e_neg / z).matrix();
  g.d_anchor = (w_pos * positive + negatives * w_neg) / temperature;
  g.d_positive = (w_pos / temperature) * anchor;
  g.d_negatives = anchor * (w_neg.transpose() / temperature);
  return g;
}

Eigen::VectorXd EtfGradient::assemble(const EtfFrame& frame, int anchor_class, int c_max) const {
  return coeff_self * frame.class_vectors.at(anchor_class).coords() +
         coeff_max * frame.class_vectors.at(c_max).coords() + coeff_resultant * frame.resultant();
}

EtfGradient analytic_etf_gradient(const BiasSpec& spec, int k, double gamma, AnchorCase c) {
  spec.validate();
  if (k < 1 || !(k * spec.rho_min() > 0.0)) {
    throw InvalidArgument(fmt::format("analytic gradient: population size {} too small", k));
  }
  if (!(gamma < 1.0 && gamma >= simplex_gamma(spec.num_classes) - 1e-12)) {
    throw InvalidArgument(fmt::format("analytic gradient: gamma {} infeasible for {} classes",
                                      gamma, spec.num_classes));
  }
  const double rho = c == AnchorCase::dominant ? spec.rho_max : spec.rho_min();
  const double e_pos = std::exp(1.0);
  const double e_neg = std::exp(gamma);
  const double p_neg = e_neg / (k * (rho * e_pos + (1.0 - rho) * e_neg));
  const double spread = spec.rho_max - spec.rho_min();

  EtfGradient g;
  g.anchor_case = c;
  g.coeff_resultant = k * spec.rho_min() * p_neg;
  if (c == AnchorCase::dominant) {
    g.coeff_self = k * p_neg * (-1.0 + spread);
    g.coeff_max = 0.0;
  } else {
    g.coeff_self = -k * p_neg;
    g.coeff_max = k * p_neg * spread;
  }
  return g;
}

namespace {

void check_population(std::span<const Eigen::VectorXd> class_vectors,
                      std::span<const int> class_counts, int anchor_class, double temperature) {
  if (class_vectors.size() != class_counts.size() || class_vectors.empty()) {
    throw InvalidArgument(fmt::format("population: {} vectors but {} counts",
                                      class_vectors.size(), class_counts.size()));
  }
  if (anchor_class < 0 || static_cast<std::size_t>(anchor_class) >= class_counts.size()) {
    throw InvalidArgument(fmt::format("population: anchor class {} out of range", anchor_class));
  }
  if (class_counts[anchor_class] <= 0) {
    throw InvalidArgument(
        fmt::format("population: anchor class {} has no positives", anchor_class));
  }
  for (int n : class_counts) {
    if (n < 0) throw InvalidArgument("population: negative class count");
  }
  check_temperature(temperature);
}

}  // namespace

Eigen::VectorXd population_infonce_gradient(std::span<const Eigen::VectorXd> class_vectors,
                                            std::span<const int> class_counts, int anchor_class,
                                            double temperature) {
  check_population(class_vectors, class_counts, anchor_class, temperature);
  const Eigen::VectorXd& z_i = class_vectors[anchor_class];
  const auto n_classes = class_vectors.size();

  std::vector<double> logits(n_classes);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < n_classes; ++c) {
    logits[c] = z_i.dot(class_vectors[c]) / temperature;
    if (class_counts[c] > 0) top = std::max(top, logits[c]);
  }
  double partition = 0.0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    partition += class_counts[c] * std::exp(logits[c] - top);
  }

  // Every member of a class shares one softmax weight P_c.
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(z_i.size());
  const double n_pos = class_counts[anchor_class];
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (class_counts[c] == 0) continue;
    const double p_c = std::exp(logits[c] - top) / partition;
    if (static_cast<int>(c) == anchor_class) {
      grad += n_pos * (p_c - 1.0 / n_pos) * class_vectors[c];
    } else {
      grad += class_counts[c] * p_c * class_vectors[c];
    }
  }
  return grad / temperature;
}

namespace {

std::vector<Eigen::VectorXd> frame_coords(const EtfFrame& frame) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(frame.class_vectors.size());
  for (const auto& z : frame.class_vectors) out.push_back(z.coords());
  return out;
}

}  // namespace

Eigen::VectorXd population_infonce_gradient(const EtfFrame& frame,
                                            std::span<const int> class_counts, int anchor_class,
                                            double temperature) {
  const auto coords = frame_coords(frame);
  return population_infonce_gradient(coords, class_counts, anchor_class, temperature);
}

double population_infonce_loss(const Eigen::VectorXd& anchor,
                               std::span<const Eigen::VectorXd> class_vectors,
                               std::span<const int> class_counts, int anchor_class,
                               double temperature) {
  check_population(class_vectors, class_counts, anchor_class, temperature);
  const int total = std::accumulate(class_counts.begin(), class_counts.end(), 0);
  if (total < 2) throw InvalidArgument("population loss: need at least 2 samples");

  // All positives coincide, so every term of the mean over p is the same
  // InfoNCE loss with the remaining k - 1 samples as negatives.
  Eigen::MatrixXd negatives(anchor.size(), total - 1);
  Eigen::Index col = 0;
  for (std::size_t c = 0; c < class_vectors.size(); ++c) {
    int copies = class_counts[c] - (static_cast<int>(c) == anchor_class ? 1 : 0);
    for (int r = 0; r < copies; ++r) negatives.col(col++) = class_vectors[c];
  }
  return info_nce_loss(anchor, class_vectors[anchor_class], negatives, temperature);
}

Eigen::VectorXd finite_diff_gradient(const std::function<double(const Eigen::VectorXd&)>& loss,
                                     const Eigen::VectorXd& z, double epsilon) {
  if (!(epsilon >= 1e-8 && epsilon <= 1e-3)) {
    throw InvalidArgument(fmt::format("finite differences: epsilon {} outside [1e-8, 1e-3]",
                                      epsilon));
  }
  Eigen::VectorXd grad(z.size());
  Eigen::VectorXd probe = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    probe[i] = z[i] + epsilon;
    const double up = loss(probe);
    probe[i] = z[i] - epsilon;
    const double down = loss(probe);
    probe[i] = z[i];
    grad[i] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

DriftReport etf_drift(const EtfFrame& frame, const BiasSpec& spec, double lr, int steps) {
  if (!(lr > 0.0)) throw InvalidArgument(fmt::format("drift: lr must be positive, got {}", lr));
  if (steps < 0) throw InvalidArgument("drift: negative step count");
  if (spec.num_classes != frame.num_classes) {
    throw InvalidArgument("drift: frame and bias spec disagree on the class count");
  }
  const std::vector<int> counts = exact_population(spec);
  const int n_classes = frame.num_classes;
  std::vector<Eigen::VectorXd> z = frame_coords(frame);

  DriftReport report;
  auto record = [&] {
    std::vector<double> row(n_classes);
    for (int c = 0; c < n_classes; ++c) {
      row[c] = z[c].dot(z[spec.c_max]);
      if (c != spec.c_max) {
        report.max_abs_drift =
            std::max(report.max_abs_drift, std::abs(row[c] - frame.off_diagonal));
      }
    }
    report.dot_with_max.push_back(std::move(row));
  };
  record();

  for (int t = 0; t < steps; ++t) {
    std::vector<Eigen::VectorXd> next(n_classes);
    for (int c = 0; c < n_classes; ++c) {
      next[c] = normalize(z[c] - lr * population_infonce_gradient(z, counts, c, 1.0)).coords();
    }
    z = std::move(next);
    record();
  }

  report.minority_decreasing.assign(n_classes, false);
  for (int c = 0; c < n_classes; ++c) {
    if (c == spec.c_max || steps == 0) continue;
    bool decreasing = true;
    for (int t = 1; t <= steps; ++t) {
      decreasing = decreasing && report.dot_with_max[t][c] < report.dot_with_max[t - 1][c];
    }
    report.minority_decreasing[c] = decreasing;
  }
  report.final_vectors = std::move(z);
  return report;
}

}  // namespace duel
