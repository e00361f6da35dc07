#pragma once

#include "duel/geometry.hpp"
#include "duel/memory.hpp"
#include "duel/nce.hpp"
#include "duel/stream.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>

namespace duel {

/// Linear encoder followed by projection onto the sphere: f(x) = normalize(W x).
class Encoder {
 public:
  /// Gaussian init with variance 1 / ambient_dim.
  Encoder(int embed_dim, int ambient_dim, std::uint64_t seed);
  explicit Encoder(Eigen::MatrixXd weights);

  Eigen::VectorXd project(const Eigen::VectorXd& x) const;
  UnitVector encode(const Eigen::VectorXd& x) const { return normalize(project(x)); }
  EncodeFn encode_fn() const;

  const Eigen::MatrixXd& weights() const noexcept { return weights_; }
  Eigen::MatrixXd& weights() noexcept { return weights_; }
  int embed_dim() const { return static_cast<int>(weights_.rows()); }
  int ambient_dim() const { return static_cast<int>(weights_.cols()); }

 private:
  Eigen::MatrixXd weights_;
};

struct EncoderGradient {
  double loss = 0.0;  // mean over the batch
  Eigen::MatrixXd weights;
};

/// Exact gradient of the mean batch loss with respect to W. Anchors and
/// positives are encoded with `enc` and receive gradient; `negatives`
/// (d x m, one embedding per column) are constants. With batch_negatives the
/// other anchors' positives are appended to each anchor's negatives and do
/// receive gradient.
EncoderGradient encoder_gradient(const Encoder& enc, std::span<const StreamDraw> batch,
                                 const Eigen::Ref<const Eigen::MatrixXd>& negatives, LossKind loss,
                                 double temperature, bool batch_negatives = false);

/// The same mean batch loss, evaluated without gradients.
double encoder_loss(const Encoder& enc, std::span<const StreamDraw> batch,
                    const Eigen::Ref<const Eigen::MatrixXd>& negatives, LossKind loss,
                    double temperature, bool batch_negatives = false);

}  // namespace duel
