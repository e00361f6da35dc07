#include "duel/encoder.hpp"
#include "duel/errors.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace duel;

namespace {

std::vector<StreamDraw> small_batch(int ambient, int n, std::mt19937_64& rng) {
  StreamConfig cfg;
  cfg.bias = BiasSpec::from_bias_factor(3, 2.0);
  cfg.ambient_dim = ambient;
  cfg.embed_dim = 2;
  cfg.noise_sigma = 0.3;
  BiasedStream s(cfg, rng());
  std::vector<StreamDraw> out;
  for (int i = 0; i < n; ++i) out.push_back(s.next());
  return out;
}

Eigen::MatrixXd unit_columns(int d, int m, std::mt19937_64& rng) {
  Eigen::MatrixXd out(d, m);
  for (int j = 0; j < m; ++j) out.col(j) = oracle::random_unit(d, rng).coords();
  return out;
}

}  // namespace

TEST(Encoder, OutputsUnitVectors) {
  Encoder enc(4, 9, 1);
  std::mt19937_64 rng(2);
  for (const auto& d : small_batch(9, 20, rng)) EXPECT_NEAR(enc.encode(d.anchor).coords().norm(), 1.0, 1e-12);
  EXPECT_EQ(enc.weights().rows(), 4);
  EXPECT_EQ(enc.weights().cols(), 9);
  EXPECT_EQ(Encoder(4, 9, 1).weights(), enc.weights());
}

TEST(Encoder, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  for (LossKind kind : {LossKind::info_nce, LossKind::logistic}) {
    for (bool batch_negs : {false, true}) {
      const Encoder enc(3, 5, 4);
      const auto batch = small_batch(5, 4, rng);
      const Eigen::MatrixXd negs = unit_columns(3, 6, rng);
      const EncoderGradient g = encoder_gradient(enc, batch, negs, kind, 0.5, batch_negs);
      const Eigen::MatrixXd numeric = oracle::fd_gradient(
          [&](const Eigen::MatrixXd& w) { return encoder_loss(Encoder(w), batch, negs, kind, 0.5, batch_negs); },
          enc.weights(), 1e-6);
      EXPECT_LE((g.weights - numeric).norm(), 1e-5 * numeric.norm()) << to_string(kind) << batch_negs;
      EXPECT_NEAR(g.loss, encoder_loss(enc, batch, negs, kind, 0.5, batch_negs), 1e-14);
    }
  }
}

TEST(Encoder, GradientIsOrthogonalToWeights) {
  // The loss sees W only through normalize(W x), so it is scale invariant.
  std::mt19937_64 rng(5);
  const Encoder enc(4, 8, 6);
  const auto batch = small_batch(8, 8, rng);
  const Eigen::MatrixXd negs = unit_columns(4, 10, rng);
  const EncoderGradient g = encoder_gradient(enc, batch, negs, LossKind::info_nce, 0.7);
  EXPECT_LE(std::abs((g.weights.array() * enc.weights().array()).sum()),
            1e-6 * g.weights.norm() * enc.weights().norm());
  const Encoder scaled(Eigen::MatrixXd(3.0 * enc.weights()));
  EXPECT_NEAR(encoder_loss(scaled, batch, negs, LossKind::info_nce, 0.7),
              encoder_loss(enc, batch, negs, LossKind::info_nce, 0.7), 1e-12);
}

TEST(Encoder, SaturatedNegativesGiveLogOnePlusK) {
  std::mt19937_64 rng(7);
  const Encoder enc(4, 8, 8);
  const auto batch = small_batch(8, 1, rng);
  const Eigen::VectorXd p = enc.encode(batch[0].positive).coords();
  for (int k : {1, 5, 20}) {
    EXPECT_NEAR(encoder_loss(enc, batch, p.replicate(1, k), LossKind::logistic, 1.0), std::log(1.0 + k), 1e-12);
  }
}

TEST(Encoder, NoNegativesMeansNoLoss) {
  std::mt19937_64 rng(9);
  const Encoder enc(3, 6, 10);
  const auto batch = small_batch(6, 1, rng);
  const EncoderGradient g = encoder_gradient(enc, batch, Eigen::MatrixXd(3, 0), LossKind::info_nce, 0.7);
  EXPECT_EQ(g.loss, 0.0);
  EXPECT_EQ(g.weights.norm(), 0.0);
}

TEST(Encoder, Errors) {
  std::mt19937_64 rng(11);
  const Encoder enc(3, 6, 12);
  const auto batch = small_batch(6, 2, rng);
  EXPECT_THROW(encoder_gradient(enc, {}, unit_columns(3, 2, rng), LossKind::info_nce, 0.7), InvalidArgument);
  EXPECT_THROW(encoder_gradient(enc, batch, unit_columns(4, 2, rng), LossKind::info_nce, 0.7), ShapeMismatch);
}
