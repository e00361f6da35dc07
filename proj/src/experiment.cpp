#include "duel/experiment.hpp"

#include "duel/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace duel {

void ExperimentConfig::validate() const {
  stream.validate();
  if (memory.capacity < 2) throw InvalidArgument("memory capacity must be >= 2");
  if (static_cast<double>(memory.capacity) >
      static_cast<double>(stream.steps) * static_cast<double>(stream.batch)) {
    throw InvalidArgument(fmt::format("memory capacity {} exceeds steps x batch = {}",
                                      memory.capacity,
                                      static_cast<long long>(stream.steps) * stream.batch));
  }
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be positive");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidArgument("lr must be finite and >= 0");
  if (eval_every < 1) throw InvalidArgument("eval_every must be >= 1");
  if (probe_per_class < 2) throw InvalidArgument("probe_per_class must be >= 2");
}

void write_metrics_csv(std::ostream& out, const RunMetrics& m) {
  out << kRunMetricsHeader << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << fmt::format("{},{:.10f},{:.10f},{:.10f},{:.10f},{:.10f},{:.10f}\n", m.step[i], m.loss[i],
                       m.intra_sim[i], m.inter_sim[i], m.mem_entropy[i], m.mem_max_frac[i],
                       m.collision_rate[i]);
  }
}

std::string run_file_stem(Policy policy, double bias_factor, std::uint64_t seed) {
  return fmt::format("{}_{:g}x_{}", to_string(policy), bias_factor, seed);
}

ProbeSimilarity probe_similarity(const Encoder& enc, std::span<const StreamDraw> probe,
                                 int num_classes) {
  std::vector<std::vector<UnitVector>> groups(static_cast<std::size_t>(num_classes));
  for (const auto& d : probe) groups.at(static_cast<std::size_t>(d.label)).push_back(enc.encode(d.anchor));

  ProbeSimilarity s;
  int intra_n = 0;
  int inter_n = 0;
  for (int a = 0; a < num_classes; ++a) {
    if (groups[a].size() >= 2) {
      s.intra += mean_pairwise_similarity(groups[a], groups[a], true);
      ++intra_n;
    }
    for (int b = a + 1; b < num_classes; ++b) {
      if (groups[a].empty() || groups[b].empty()) continue;
      s.inter += mean_pairwise_similarity(groups[a], groups[b], false);
      ++inter_n;
    }
  }
  if (intra_n > 0) s.intra /= intra_n;
  if (inter_n > 0) s.inter /= inter_n;
  return s;
}

RunMetrics run_experiment(const ExperimentConfig& cfg, const ExperimentHooks& hooks) {
  cfg.validate();
  const int n_classes = cfg.stream.bias.num_classes;
  const std::uint64_t seed = cfg.stream.seed;

  BiasedStream stream = gen_stream(cfg.stream);
  BiasedStream probe_source(cfg.stream, derive_seed(seed, 2));
  std::vector<StreamDraw> probe;
  for (int c = 0; c < n_classes; ++c) {
    for (int i = 0; i < cfg.probe_per_class; ++i) probe.push_back({probe_source.view(c), {}, c});
  }

  Encoder encoder(cfg.stream.embed_dim, cfg.stream.ambient_dim, derive_seed(seed, 3));
  MemoryOptions mem_opts = cfg.memory;
  mem_opts.seed = derive_seed(seed, 4);
  DuelMemory memory(mem_opts, cfg.score);
  Policy policy = cfg.memory.policy;
  const bool re_encode = cfg.memory.variant == MemoryVariant::re_encode;

  auto make_sample = [&](const Eigen::VectorXd& x, int label) {
    Sample s{encoder.encode(x), label, std::nullopt};
    if (re_encode) s.raw = x;
    return s;
  };
  auto log_eviction = [&](const std::optional<EvictionRecord>& r) {
    if (r && hooks.eviction_log != nullptr) hooks.eviction_log->write(*r);
  };

  // Initial memory: the first `capacity` stream samples.
  while (memory.size() < memory.capacity()) {
    const StreamDraw d = stream.next();
    log_eviction(memory.insert_replace(make_sample(d.anchor, d.label)));
  }

  RunMetrics metrics;
  double loss_acc = 0.0;
  double collision_acc = 0.0;
  int window = 0;
  std::vector<StreamDraw> batch(static_cast<std::size_t>(cfg.stream.batch));

  for (int step = 1; step <= cfg.stream.steps; ++step) {
    for (auto& d : batch) d = stream.next();
    if (re_encode) memory.refresh_embeddings(encoder.encode_fn());

    const Eigen::MatrixXd negatives = memory.embedding_matrix();
    const EncoderGradient grad = encoder_gradient(encoder, batch, negatives, cfg.loss,
                                                  cfg.temperature, cfg.batch_negatives);
    if (!std::isfinite(grad.loss) || !grad.weights.allFinite()) {
      throw Divergence(fmt::format("loss became non-finite at step {} (loss = {})", step,
                                   grad.loss));
    }

    // Evaluation only: share of negatives carrying the anchor's hidden class.
    const auto labels = memory.hidden_labels();
    double collisions = 0.0;
    for (const auto& d : batch) {
      std::size_t same = 0;
      for (int l : labels) same += (l == d.label) ? 1 : 0;
      collisions += static_cast<double>(same) / static_cast<double>(labels.size());
    }
    collision_acc += collisions / static_cast<double>(batch.size());
    loss_acc += grad.loss;
    ++window;

    if (hooks.on_step) hooks.on_step(StepView{step, encoder, batch, negatives, grad});
    encoder.weights() -= cfg.lr * grad.weights;
    if (!encoder.weights().allFinite()) {
      throw Divergence(fmt::format("encoder weights became non-finite at step {}", step));
    }

    for (const auto& d : batch) log_eviction(memory.insert_replace(make_sample(d.anchor, d.label)));
    policy = update_policy(policy);

    if (step % cfg.eval_every == 0 || step == cfg.stream.steps) {
      const ProbeSimilarity sim = probe_similarity(encoder, probe, n_classes);
      const CompositionMetrics comp = memory.composition_metrics();
      metrics.step.push_back(step);
      metrics.loss.push_back(loss_acc / window);
      metrics.intra_sim.push_back(sim.intra);
      metrics.inter_sim.push_back(sim.inter);
      metrics.mem_entropy.push_back(comp.entropy);
      metrics.mem_max_frac.push_back(comp.max_fraction);
      metrics.collision_rate.push_back(collision_acc / window);
      loss_acc = 0.0;
      collision_acc = 0.0;
      window = 0;
    }
  }
  return metrics;
}

}  // namespace duel
