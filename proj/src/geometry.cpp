#include "duel/geometry.hpp"

#include "duel/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace duel {

double UnitVector::dot(const UnitVector& other) const {
  if (other.dim() != dim()) {
    throw ShapeMismatch(fmt::format("dot: dimension {} vs {}", dim(), other.dim()));
  }
  return coords_.dot(other.coords_);
}

UnitVector normalize(const Eigen::VectorXd& v) {
  if (v.size() < 2) {
    throw DegenerateInput(fmt::format("normalize: dimension {} < 2", v.size()));
  }
  if (!v.allFinite()) {
    throw DegenerateInput("normalize: non-finite coordinate");
  }
  double n = v.norm();
  if (std::isinf(n)) n = v.stableNorm();  // squared norm overflowed
  if (!(n > 1e-12)) {
    throw DegenerateInput(fmt::format("normalize: norm {:.3g} is too small to normalize", n));
  }
  return UnitVector(v / n);
}

Eigen::VectorXd EtfFrame::resultant() const {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(class_vectors.front().dim());
  for (const auto& z : class_vectors) sum += z.coords();
  return sum;
}

double simplex_gamma(int num_classes) { return -1.0 / (num_classes - 1); }
double reciprocal_gamma(int num_classes) { return -1.0 / num_classes; }

EtfFrame make_etf(int num_classes, int dim, double off_diagonal) {
  if (num_classes < 2) {
    throw FrameInfeasible(fmt::format("make_etf: need at least 2 classes, got {}", num_classes));
  }
  if (dim < num_classes) {
    throw FrameInfeasible(
        fmt::format("make_etf: dim {} is smaller than num_classes {}", dim, num_classes));
  }
  if (!std::isfinite(off_diagonal)) {
    throw FrameInfeasible("make_etf: off-diagonal value is not finite");
  }
  // Eigenvalues of (1-g)I + gJ: 1-g (C-1 times) and 1+(C-1)g (once).
  const double lambda_bulk = 1.0 - off_diagonal;
  const double lambda_mean = 1.0 + (num_classes - 1) * off_diagonal;
  if (lambda_bulk <= 0.0) {
    throw FrameInfeasible(fmt::format(
        "make_etf: Gram eigenvalue 1-gamma = {:.6g} must be positive (gamma < 1)", lambda_bulk));
  }
  if (lambda_mean < -1e-12 * (num_classes - 1)) {
    throw FrameInfeasible(fmt::format(
        "make_etf: Gram eigenvalue 1+(C-1)gamma = {:.6g} is negative (gamma >= -1/(C-1) = {:.6g} "
        "required)",
        lambda_mean, simplex_gamma(num_classes)));
  }

  const Eigen::MatrixXd gram =
      lambda_bulk * Eigen::MatrixXd::Identity(num_classes, num_classes) +
      Eigen::MatrixXd::Constant(num_classes, num_classes, off_diagonal);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const Eigen::VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd root =
      eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();

  EtfFrame frame;
  frame.off_diagonal = off_diagonal;
  frame.num_classes = num_classes;
  frame.class_vectors.reserve(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    v.head(num_classes) = root.row(c).transpose();
    frame.class_vectors.push_back(normalize(v));
  }
  return frame;
}

double mean_pairwise_similarity(std::span<const UnitVector> group_a,
                                std::span<const UnitVector> group_b, bool exclude_self) {
  if (group_a.empty() || group_b.empty()) {
    throw EmptyInput("mean_pairwise_similarity: empty group");
  }
  const Eigen::Index d = group_a.front().dim();
  auto accumulate = [d](std::span<const UnitVector> g) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(d);
    for (const auto& z : g) {
      if (z.dim() != d) throw ShapeMismatch("mean_pairwise_similarity: mixed dimensions");
      s += z.coords();
    }
    return s;
  };

  const Eigen::VectorXd sum_a = accumulate(group_a);
  if (exclude_self) {
    if (group_a.size() != group_b.size() || group_a.size() < 2) {
      throw InvalidArgument("mean_pairwise_similarity: exclude_self needs one group of size >= 2");
    }
    for (std::size_t i = 0; i < group_a.size(); ++i) {
      if (group_a[i].coords() != group_b[i].coords()) {
        throw InvalidArgument("mean_pairwise_similarity: exclude_self needs identical groups");
      }
    }
    double self = 0.0;
    for (const auto& z : group_a) self += z.coords().squaredNorm();
    const double n = static_cast<double>(group_a.size());
    return std::clamp((sum_a.squaredNorm() - self) / (n * (n - 1.0)), -1.0, 1.0);
  }
  const Eigen::VectorXd sum_b = accumulate(group_b);
  if (sum_b.size() != sum_a.size()) throw ShapeMismatch("mean_pairwise_similarity: dimension");
  const double pairs = static_cast<double>(group_a.size()) * static_cast<double>(group_b.size());
  return std::clamp(sum_a.dot(sum_b) / pairs, -1.0, 1.0);
}

Eigen::VectorXd tangential_component(const Eigen::VectorXd& g, const UnitVector& z) {
  if (g.size() != z.dim()) throw ShapeMismatch("tangential_component: dimension");
  return g - g.dot(z.coords()) * z.coords();
}

}  // namespace duel
