#include "duel/errors.hpp"
#include "duel/stream.hpp"

#include <gtest/gtest.h>

#include <vector>

using namespace duel;

namespace {

std::vector<double> class_frequencies(const StreamConfig& cfg, int draws, std::uint64_t seed) {
  BiasedStream s(cfg, seed);
  std::vector<double> freq(static_cast<std::size_t>(cfg.bias.num_classes), 0.0);
  for (int i = 0; i < draws; ++i) freq[static_cast<std::size_t>(s.draw_class())] += 1.0 / draws;
  return freq;
}

}  // namespace

TEST(BiasedStream, NoiselessViewsAreThePrototype) {
  StreamConfig cfg;
  cfg.noise_sigma = 0.0;
  BiasedStream s(cfg, 3);
  for (int i = 0; i < 50; ++i) {
    const StreamDraw d = s.next();
    EXPECT_EQ(d.anchor, d.positive);
    EXPECT_EQ(d.anchor, s.prototypes()[static_cast<std::size_t>(d.label)]);
  }
}

TEST(BiasedStream, PrototypesFormTheRequestedFrame) {
  StreamConfig cfg;
  const BiasedStream s(cfg, 1);
  ASSERT_EQ(s.prototypes().size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_NEAR(s.prototypes()[i].norm(), 1.0, 1e-12);
    EXPECT_EQ(s.prototypes()[i].size(), 32);
    for (std::size_t j = i + 1; j < 10; ++j) {
      EXPECT_NEAR(s.prototypes()[i].dot(s.prototypes()[j]), -1.0 / 9.0, 1e-9);
    }
  }
  cfg.prototype_separation = -0.1;
  const BiasedStream r(cfg, 1);
  EXPECT_NEAR(r.prototypes()[2].dot(r.prototypes()[7]), -0.1, 1e-9);
}

TEST(BiasedStream, UniformMarginal) {
  StreamConfig cfg;
  for (double f : class_frequencies(cfg, 50000, 9)) EXPECT_NEAR(f, 0.1, 0.02);
}

TEST(BiasedStream, BiasedMarginal) {
  StreamConfig cfg;
  cfg.bias = BiasSpec::from_bias_factor(10, 27.0);
  const auto freq = class_frequencies(cfg, 50000, 10);
  EXPECT_NEAR(freq[0], 0.75, 0.02);
  for (std::size_t c = 1; c < 10; ++c) EXPECT_NEAR(freq[c], 1.0 / 36.0, 0.01);
}

TEST(BiasedStream, NoiseHasTheRequestedScale) {
  StreamConfig cfg;
  cfg.noise_sigma = 0.2;
  BiasedStream s(cfg, 12);
  double sq = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const StreamDraw d = s.next();
    sq += (d.anchor - s.prototypes()[static_cast<std::size_t>(d.label)]).squaredNorm();
  }
  EXPECT_NEAR(sq / (n * 32.0), 0.04, 0.002);
}

TEST(BiasedStream, SameSeedSameStream) {
  StreamConfig cfg;
  BiasedStream a(cfg, 77);
  BiasedStream b(cfg, 77);
  BiasedStream c(cfg, 78);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const StreamDraw x = a.next();
    const StreamDraw y = b.next();
    const StreamDraw z = c.next();
    EXPECT_EQ(x.anchor, y.anchor);
    EXPECT_EQ(x.label, y.label);
    differs = differs || x.anchor != z.anchor;
  }
  EXPECT_TRUE(differs);
}

TEST(BiasedStream, DerivedSeedsAreDistinct) {
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
  EXPECT_EQ(derive_seed(5, 9), derive_seed(5, 9));
}

TEST(StreamConfig, Validation) {
  StreamConfig cfg;
  cfg.prototype_separation = -0.5;  // below -1/(C-1) for ten classes
  EXPECT_THROW(gen_stream(cfg), FrameInfeasible);

  StreamConfig small;
  small.ambient_dim = 8;  // fewer dimensions than classes
  small.embed_dim = 4;
  EXPECT_THROW(gen_stream(small), FrameInfeasible);

  StreamConfig bad;
  bad.embed_dim = 64;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = StreamConfig{};
  bad.noise_sigma = -1.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = StreamConfig{};
  bad.batch = 0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}
