#include "duel/encoder.hpp"

#include "duel/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <random>

namespace duel {

Encoder::Encoder(int embed_dim, int ambient_dim, std::uint64_t seed) {
  if (embed_dim < 2 || ambient_dim < 1) {
    throw InvalidArgument(fmt::format("encoder: bad shape {}x{}", embed_dim, ambient_dim));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(ambient_dim)));
  weights_.resize(embed_dim, ambient_dim);
  do {
    for (Eigen::Index j = 0; j < weights_.cols(); ++j) {
      for (Eigen::Index i = 0; i < weights_.rows(); ++i) weights_(i, j) = gauss(rng);
    }
  } while ((weights_.rowwise().norm().array() == 0.0).any() ||
           (weights_.colwise().norm().array() == 0.0).any());
}

Encoder::Encoder(Eigen::MatrixXd weights) : weights_(std::move(weights)) {
  if (weights_.rows() < 2 || weights_.cols() < 1) {
    throw InvalidArgument("encoder: weights need at least 2 rows and 1 column");
  }
  if ((weights_.rowwise().norm().array() == 0.0).any() ||
      (weights_.colwise().norm().array() == 0.0).any()) {
    throw InvalidArgument("encoder: a weight row or column is identically zero");
  }
}

Eigen::VectorXd Encoder::project(const Eigen::VectorXd& x) const {
  if (x.size() != weights_.cols()) {
    throw ShapeMismatch(fmt::format("encoder: input dimension {} vs {}", x.size(), weights_.cols()));
  }
  return weights_ * x;
}

EncodeFn Encoder::encode_fn() const {
  return [w = weights_](const Eigen::VectorXd& x) -> Eigen::VectorXd { return w * x; };
}

namespace {

struct Encoded {
  Eigen::MatrixXd inputs;     // D x B
  Eigen::MatrixXd projected;  // d x B, W x
  Eigen::MatrixXd unit;       // d x B, normalized columns
};

Encoded encode_all(const Encoder& enc, std::span<const StreamDraw> batch, bool positives) {
  Encoded e;
  const auto b = static_cast<Eigen::Index>(batch.size());
  e.inputs.resize(enc.ambient_dim(), b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto& d = batch[static_cast<std::size_t>(i)];
    e.inputs.col(i) = positives ? d.positive : d.anchor;
  }
  e.projected = enc.weights() * e.inputs;
  e.unit.resize(e.projected.rows(), b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const double n = e.projected.col(i).norm();
    if (!(n > 1e-12)) throw DegenerateInput("encoder: input maps to the zero vector");
    e.unit.col(i) = e.projected.col(i) / n;
  }
  return e;
}

// Pulls dL/du back through u = y / ||y|| and y = W x.
Eigen::MatrixXd pull_back(const Encoded& e, const Eigen::MatrixXd& d_unit) {
  Eigen::MatrixXd d_proj(d_unit.rows(), d_unit.cols());
  for (Eigen::Index i = 0; i < d_unit.cols(); ++i) {
    const auto u = e.unit.col(i);
    const auto g = d_unit.col(i);
    d_proj.col(i) = (g - u.dot(g) * u) / e.projected.col(i).norm();
  }
  return d_proj * e.inputs.transpose();
}

EncoderGradient evaluate(const Encoder& enc, std::span<const StreamDraw> batch,
                         const Eigen::Ref<const Eigen::MatrixXd>& negatives, LossKind loss,
                         double temperature, bool batch_negatives, bool with_gradient) {
  if (batch.empty()) throw InvalidArgument("encoder_gradient: empty batch");
  if (negatives.cols() > 0 && negatives.rows() != enc.embed_dim()) {
    throw ShapeMismatch(fmt::format("encoder_gradient: negatives have dimension {} vs {}",
                                    negatives.rows(), enc.embed_dim()));
  }
  const auto b = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index extra = batch_negatives ? b - 1 : 0;

  const Encoded anchors = encode_all(enc, batch, false);
  const Encoded positives = encode_all(enc, batch, true);
  Eigen::MatrixXd d_anchor = Eigen::MatrixXd::Zero(enc.embed_dim(), b);
  Eigen::MatrixXd d_positive = Eigen::MatrixXd::Zero(enc.embed_dim(), b);

  Eigen::MatrixXd negs(enc.embed_dim(), negatives.cols() + extra);
  negs.leftCols(negatives.cols()) = negatives;

  EncoderGradient out;
  for (Eigen::Index i = 0; i < b; ++i) {
    if (batch_negatives) {
      Eigen::Index col = negatives.cols();
      for (Eigen::Index j = 0; j < b; ++j) {
        if (j != i) negs.col(col++) = positives.unit.col(j);
      }
    }
    const auto a = anchors.unit.col(i);
    const auto p = positives.unit.col(i);
    if (!with_gradient) {
      out.loss += loss == LossKind::info_nce ? info_nce_loss(a, p, negs, temperature)
                                             : logistic_nce_loss(a, p, negs);
      continue;
    }
    const LossGradient g = loss == LossKind::info_nce ? info_nce_gradient(a, p, negs, temperature)
                                                      : logistic_nce_gradient(a, p, negs);
    out.loss += g.loss;
    d_anchor.col(i) += g.d_anchor;
    d_positive.col(i) += g.d_positive;
    if (batch_negatives) {
      Eigen::Index col = negatives.cols();
      for (Eigen::Index j = 0; j < b; ++j) {
        if (j != i) d_positive.col(j) += g.d_negatives.col(col++);
      }
    }
  }
  const double scale = 1.0 / static_cast<double>(b);
  out.loss *= scale;
  if (with_gradient) {
    out.weights = scale * (pull_back(anchors, d_anchor) + pull_back(positives, d_positive));
  }
  return out;
}

}  // namespace

EncoderGradient encoder_gradient(const Encoder& enc, std::span<const StreamDraw> batch,
                                 const Eigen::Ref<const Eigen::MatrixXd>& negatives, LossKind loss,
                                 double temperature, bool batch_negatives) {
  return evaluate(enc, batch, negatives, loss, temperature, batch_negatives, true);
}

double encoder_loss(const Encoder& enc, std::span<const StreamDraw> batch,
                    const Eigen::Ref<const Eigen::MatrixXd>& negatives, LossKind loss,
                    double temperature, bool batch_negatives) {
  return evaluate(enc, batch, negatives, loss, temperature, batch_negatives, false).loss;
}

}  // namespace duel
