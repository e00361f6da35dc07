#include "duel/errors.hpp"
#include "duel/experiment.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace duel;

namespace {

ExperimentConfig tiny(Policy policy = Policy::duel_naive) {
  ExperimentConfig cfg;
  cfg.stream.bias = BiasSpec::from_bias_factor(4, 3.0);
  cfg.stream.ambient_dim = 8;
  cfg.stream.embed_dim = 4;
  cfg.stream.steps = 200;
  cfg.stream.batch = 8;
  cfg.stream.seed = 21;
  cfg.memory.capacity = 16;
  cfg.memory.policy = policy;
  cfg.eval_every = 50;
  cfg.probe_per_class = 5;
  return cfg;
}

}  // namespace

TEST(Experiment, RowsAtEveryEvaluationPoint) {
  const RunMetrics m = run_experiment(tiny());
  EXPECT_EQ(m.step, (std::vector<int>{50, 100, 150, 200}));
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_GT(m.loss[i], 0.0);
    EXPECT_GE(m.collision_rate[i], 0.0);
    EXPECT_LE(m.collision_rate[i], 1.0);
    EXPECT_LE(m.mem_max_frac[i], 1.0);
    EXPECT_LE(m.mem_entropy[i], std::log(4.0) + 1e-12);
  }
  ExperimentConfig odd = tiny();
  odd.eval_every = 70;
  EXPECT_EQ(run_experiment(odd).step, (std::vector<int>{70, 140, 200}));
}

TEST(Experiment, Deterministic) {
  for (Policy p : {Policy::duel_naive, Policy::fifo, Policy::reservoir}) {
    std::ostringstream a;
    std::ostringstream b;
    write_metrics_csv(a, run_experiment(tiny(p)));
    write_metrics_csv(b, run_experiment(tiny(p)));
    EXPECT_EQ(a.str(), b.str()) << to_string(p);
  }
}

TEST(Experiment, ZeroLearningRateFreezesTheEncoder) {
  ExperimentConfig cfg = tiny();
  cfg.lr = 0.0;
  const RunMetrics m = run_experiment(cfg);
  for (std::size_t i = 1; i < m.size(); ++i) {
    EXPECT_EQ(m.intra_sim[i], m.intra_sim[0]);
    EXPECT_EQ(m.inter_sim[i], m.inter_sim[0]);
  }
}

TEST(Experiment, EvaluationDoesNotPerturbTraining) {
  ExperimentConfig every = tiny();
  every.eval_every = 10;
  ExperimentConfig sparse = tiny();
  sparse.eval_every = 100;
  const RunMetrics a = run_experiment(every);
  const RunMetrics b = run_experiment(sparse);
  EXPECT_EQ(a.intra_sim[9], b.intra_sim[0]);
  EXPECT_EQ(a.inter_sim.back(), b.inter_sim.back());
  EXPECT_EQ(a.mem_max_frac.back(), b.mem_max_frac.back());
}

TEST(Experiment, StepGradientsMatchFiniteDifferences) {
  ExperimentConfig cfg = tiny();
  int checked = 0;
  ExperimentHooks hooks;
  hooks.on_step = [&](const StepView& v) {
    if (v.step % 50 != 1) return;
    const Eigen::MatrixXd numeric = oracle::fd_gradient(
        [&](const Eigen::MatrixXd& w) {
          return encoder_loss(Encoder(w), v.batch, v.negatives, cfg.loss, cfg.temperature, cfg.batch_negatives);
        },
        v.encoder.weights(), 1e-6);
    EXPECT_LE((v.gradient.weights - numeric).norm(), 1e-4 * numeric.norm()) << v.step;
    ++checked;
  };
  run_experiment(cfg, hooks);
  EXPECT_EQ(checked, 4);
}

TEST(Experiment, EvictionLogCoversEveryReplacement) {
  ExperimentConfig cfg = tiny(Policy::fifo);
  std::ostringstream out;
  EvictionCsvWriter w(out, cfg.memory.policy);
  ExperimentHooks hooks;
  hooks.eviction_log = &w;
  run_experiment(cfg, hooks);
  std::istringstream in(out.str());
  std::string line;
  int rows = -1;  // header
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, cfg.stream.steps * cfg.stream.batch);
}

TEST(Experiment, ReEncodeVariantRuns) {
  ExperimentConfig cfg = tiny();
  cfg.memory.variant = MemoryVariant::re_encode;
  EXPECT_EQ(run_experiment(cfg).size(), 4u);
}

TEST(Experiment, Validation) {
  ExperimentConfig cfg = tiny();
  cfg.memory.capacity = 5000;
  EXPECT_THROW(run_experiment(cfg), InvalidArgument);
  cfg = tiny();
  cfg.temperature = 0.0;
  EXPECT_THROW(run_experiment(cfg), InvalidArgument);
  cfg = tiny();
  cfg.eval_every = 0;
  EXPECT_THROW(run_experiment(cfg), InvalidArgument);
  cfg = tiny();
  cfg.lr = -1.0;
  EXPECT_THROW(run_experiment(cfg), InvalidArgument);
}

TEST(Experiment, NonFiniteLossIsReportedAsDivergence) {
  ExperimentConfig cfg = tiny();
  cfg.temperature = 4.9e-324;
  EXPECT_THROW(run_experiment(cfg), Divergence);
}

TEST(Experiment, RunFileStem) {
  EXPECT_EQ(run_file_stem(Policy::duel_naive, 27.0, 3), "duel-naive_27x_3");
  EXPECT_EQ(run_file_stem(Policy::fifo, 1.0, 0), "fifo_1x_0");
}

TEST(Experiment, ProbeSimilarityOfAPerfectEncoder) {
  StreamConfig cfg;
  cfg.bias = BiasSpec::from_bias_factor(3, 1.0);
  cfg.ambient_dim = 3;
  cfg.embed_dim = 3;
  cfg.noise_sigma = 0.0;
  BiasedStream s(cfg, 1);
  std::vector<StreamDraw> probe;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 4; ++i) probe.push_back({s.view(c), {}, c});
  }
  const ProbeSimilarity sim = probe_similarity(Encoder(Eigen::MatrixXd::Identity(3, 3)), probe, 3);
  EXPECT_NEAR(sim.intra, 1.0, 1e-12);
  EXPECT_NEAR(sim.inter, -0.5, 1e-9);
}
