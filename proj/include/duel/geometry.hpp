#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace duel {

/// A point on the unit hypersphere S^{d-1}, d >= 2.
///
/// Only constructible through normalize(), so every instance carries a
/// Euclidean norm of 1 up to rounding.
class UnitVector {
 public:
  const Eigen::VectorXd& coords() const noexcept { return coords_; }
  Eigen::Index dim() const noexcept { return coords_.size(); }

  /// Cosine similarity; throws ShapeMismatch on unequal dimension.
  double dot(const UnitVector& other) const;

  UnitVector operator-() const { return UnitVector(-coords_); }

  friend UnitVector normalize(const Eigen::VectorXd& v);

 private:
  explicit UnitVector(Eigen::VectorXd coords) : coords_(std::move(coords)) {}
  Eigen::VectorXd coords_;
};

/// v / ||v||. Throws DegenerateInput when ||v|| <= 1e-12, the input is not
/// finite, or the dimension is below 2.
UnitVector normalize(const Eigen::VectorXd& v);

/// Unit vectors with a common pairwise inner product.
struct EtfFrame {
  std::vector<UnitVector> class_vectors;
  double off_diagonal = 0.0;
  int num_classes = 0;

  /// Sum of all class vectors; zero exactly when off_diagonal = -1/(C-1).
  Eigen::VectorXd resultant() const;
};

/// The zero-sum off-diagonal value -1/(C-1).
double simplex_gamma(int num_classes);
/// The -1/C off-diagonal value.
double reciprocal_gamma(int num_classes);

/// Builds num_classes unit vectors in R^dim whose Gram matrix is
/// (1-gamma) I + gamma J. The vectors are the rows of the symmetric square
/// root of that matrix, padded with zeros to `dim` coordinates.
///
/// Throws FrameInfeasible when either Gram eigenvalue (1-gamma, multiplicity
/// C-1, or 1+(C-1)gamma) is negative, or when dim < num_classes.
EtfFrame make_etf(int num_classes, int dim, double off_diagonal);

/// Mean dot product over all ordered pairs (a, b). With exclude_self the two
/// groups must be the same group and the n self-pairs are dropped.
/// Throws EmptyInput on an empty group.
double mean_pairwise_similarity(std::span<const UnitVector> group_a,
                                std::span<const UnitVector> group_b,
                                bool exclude_self);

/// Component of g orthogonal to the unit vector z.
Eigen::VectorXd tangential_component(const Eigen::VectorXd& g, const UnitVector& z);

}  // namespace duel
