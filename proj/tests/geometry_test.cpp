#include "duel/errors.hpp"
#include "duel/geometry.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace duel;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST(Normalize, ScalesThreeFourFive) {
  UnitVector u = normalize(vec({3, 4}));
  EXPECT_DOUBLE_EQ(u.coords()[0], 0.6);
  EXPECT_DOUBLE_EQ(u.coords()[1], 0.8);
}

TEST(Normalize, UnitInputIsUnchanged) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(6);
  e[5] = 1.0;
  EXPECT_EQ(normalize(e).coords(), e);
}

TEST(Normalize, RandomVectorsHaveUnitNormAndAreIdempotent) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int t = 0; t < 1000; ++t) {
    Eigen::VectorXd v(2 + t % 30);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = g(rng);
    UnitVector once = normalize(v);
    EXPECT_NEAR(once.coords().norm(), 1.0, 1e-12);
    UnitVector twice = normalize(once.coords());
    EXPECT_LE((twice.coords() - once.coords()).lpNorm<Eigen::Infinity>(), 1e-15);
  }
}

TEST(Normalize, RejectsDegenerateInput) {
  EXPECT_THROW(normalize(Eigen::VectorXd::Zero(4)), DegenerateInput);
  EXPECT_THROW(normalize(vec({1e-13, 0})), DegenerateInput);
  EXPECT_THROW(normalize(vec({1.0})), DegenerateInput);
  EXPECT_THROW(normalize(vec({1.0, std::nan("")})), DegenerateInput);
  EXPECT_THROW(normalize(vec({1.0, INFINITY})), DegenerateInput);
}

TEST(Normalize, SurvivesOverflowingSquaredNorm) {
  UnitVector u = normalize(vec({3e200, 4e200}));
  EXPECT_NEAR(u.coords()[0], 0.6, 1e-15);
  EXPECT_NEAR(u.coords()[1], 0.8, 1e-15);
}

TEST(UnitVectorDot, ShapeMismatchThrows) {
  EXPECT_THROW(normalize(vec({1, 0})).dot(normalize(vec({1, 0, 0}))), ShapeMismatch);
}

TEST(MakeEtf, AntipodalPair) {
  EtfFrame f = make_etf(2, 2, -1.0);
  EXPECT_NEAR(f.class_vectors[0].dot(f.class_vectors[1]), -1.0, 1e-12);
}

TEST(MakeEtf, FiveClassesSimplex) {
  EtfFrame f = make_etf(5, 8, -0.25);
  int pairs = 0;
  for (int i = 0; i < 5; ++i) {
    EXPECT_NEAR(f.class_vectors[i].coords().norm(), 1.0, 1e-12);
    for (int j = i + 1; j < 5; ++j) {
      EXPECT_NEAR(static_cast<double>(oracle::dot(f.class_vectors[i].coords(), f.class_vectors[j].coords())),
                  -0.25, 1e-9);
      ++pairs;
    }
  }
  EXPECT_EQ(pairs, 10);
  EXPECT_LE(f.resultant().norm(), 1e-9);
}

TEST(MakeEtf, TenClassesReciprocalGamma) {
  EtfFrame f = make_etf(10, 16, -0.1);
  for (int i = 0; i < 10; ++i) {
    for (int j = i + 1; j < 10; ++j) EXPECT_NEAR(f.class_vectors[i].dot(f.class_vectors[j]), -0.1, 1e-9);
  }
  // |sum z|^2 = C + C (C - 1) gamma = 1
  EXPECT_NEAR(f.resultant().squaredNorm(), 1.0, 1e-6);
}

TEST(MakeEtf, ZeroSumOnlyAtSimplexGamma) {
  for (int c : {3, 5, 10}) {
    EXPECT_LE(make_etf(c, c, simplex_gamma(c)).resultant().norm(), 1e-9) << c;
    EXPECT_NEAR(make_etf(c, c, reciprocal_gamma(c)).resultant().squaredNorm(), 1.0, 1e-6) << c;
  }
}

TEST(MakeEtf, ReplicatedVertexPattern) {
  // Same-class slots share a vertex (product 1), other classes meet at gamma.
  EtfFrame f = make_etf(4, 6, -1.0 / 3.0);
  std::vector<UnitVector> slots = {f.class_vectors[0], f.class_vectors[0], f.class_vectors[2]};
  EXPECT_NEAR(slots[0].dot(slots[1]), 1.0, 1e-12);
  EXPECT_NEAR(slots[0].dot(slots[2]), -1.0 / 3.0, 1e-9);
}

TEST(MakeEtf, InfeasibleFramesNameTheCondition) {
  try {
    make_etf(4, 4, -0.5);
    FAIL() << "expected FrameInfeasible";
  } catch (const FrameInfeasible& e) {
    EXPECT_NE(std::string(e.what()).find("1+(C-1)"), std::string::npos) << e.what();
  }
  EXPECT_THROW(make_etf(4, 4, 1.0), FrameInfeasible);
  EXPECT_THROW(make_etf(4, 3, -0.2), FrameInfeasible);
  EXPECT_THROW(make_etf(1, 3, 0.0), FrameInfeasible);
}

TEST(MeanPairwiseSimilarity, SpecExamples) {
  UnitVector z = normalize(vec({1, 2, 3}));
  std::vector<UnitVector> same = {z, z, z};
  EXPECT_NEAR(mean_pairwise_similarity(same, same, true), 1.0, 1e-12);
  std::vector<UnitVector> a = {z};
  std::vector<UnitVector> b = {-z};
  EXPECT_NEAR(mean_pairwise_similarity(a, b, false), -1.0, 1e-12);
}

TEST(MeanPairwiseSimilarity, NoisyClustersMatchBruteForce) {
  std::mt19937_64 rng(5);
  EtfFrame f = make_etf(4, 12, simplex_gamma(4));
  std::normal_distribution<double> g(0.0, 0.1);
  auto cluster = [&](int c, int n) {
    std::vector<UnitVector> out;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd v = f.class_vectors[c].coords();
      for (Eigen::Index d = 0; d < v.size(); ++d) v[d] += g(rng);
      out.push_back(normalize(v));
    }
    return out;
  };
  auto a = cluster(0, 37);
  auto b = cluster(3, 21);
  EXPECT_NEAR(mean_pairwise_similarity(a, a, true), oracle::mean_pairwise(a, a, true), 1e-12);
  EXPECT_NEAR(mean_pairwise_similarity(a, b, false), oracle::mean_pairwise(a, b, false), 1e-12);
  EXPECT_NEAR(mean_pairwise_similarity(b, a, false), oracle::mean_pairwise(b, a, false), 1e-12);
}

TEST(MeanPairwiseSimilarity, Errors) {
  std::vector<UnitVector> none;
  std::vector<UnitVector> one = {normalize(vec({1, 0}))};
  EXPECT_THROW(mean_pairwise_similarity(none, one, false), EmptyInput);
  EXPECT_THROW(mean_pairwise_similarity(one, none, false), EmptyInput);
  EXPECT_THROW(mean_pairwise_similarity(one, one, true), InvalidArgument);
}

TEST(TangentialComponent, RemovesRadialPart) {
  UnitVector z = normalize(vec({1, 1, 0}));
  Eigen::VectorXd g = vec({2, 0, 5});
  Eigen::VectorXd t = tangential_component(g, z);
  EXPECT_NEAR(t.dot(z.coords()), 0.0, 1e-15);
  EXPECT_NEAR((g - t).norm(), std::abs(g.dot(z.coords())), 1e-12);
}
