#include "duel/sweeps.hpp"

#include "duel/errors.hpp"
#include "duel/geometry.hpp"
#include "duel/stream.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace duel {

std::string to_string(GammaConvention g) {
  return g == GammaConvention::simplex ? "simplex" : "reciprocal";
}

double gamma_for(GammaConvention g, int num_classes) {
  return g == GammaConvention::simplex ? simplex_gamma(num_classes) : reciprocal_gamma(num_classes);
}

double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-300});
  return (a - b).norm() / scale;
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

struct TrialOutcome {
  double before = 0.0;
  double after = 0.0;
  int incoming_class = 0;
  int evicted_class = 0;
  bool evicted_majority = true;
};

TrialOutcome run_trial(const ScoreFunction& h, TieBreak tie_break,
                       const std::vector<UnitVector>& pool, const std::vector<int>& labels,
                       const UnitVector& incoming, int incoming_label) {
  MemoryOptions opts;
  opts.capacity = pool.size();
  opts.policy = Policy::duel_naive;
  opts.tie_break = tie_break;
  DuelMemory mem(opts, h);
  for (std::size_t i = 0; i < pool.size(); ++i) mem.insert_replace(Sample{pool[i], labels[i], {}});

  TrialOutcome out;
  out.before = pool_diversity(mem.embeddings(), h);
  const auto hist = mem.composition_metrics().histogram;
  std::size_t top = 0;
  for (const auto& [c, n] : hist) top = std::max(top, n);

  const auto record = mem.insert_replace(Sample{incoming, incoming_label, {}});
  out.after = pool_diversity(mem.embeddings(), h);
  out.incoming_class = incoming_label;
  out.evicted_class = record->evicted_sample.label;
  out.evicted_majority = hist.at(out.evicted_class) == top;
  return out;
}

}  // namespace

std::vector<SafetySweepResult> theorem1_sweep(const SafetySweepConfig& cfg) {
  if (cfg.trials < 0 || cfg.scores.empty() || cfg.class_counts.empty() || cfg.gammas.empty() ||
      cfg.pool_sizes.empty()) {
    throw InvalidArgument("safety sweep: empty grid");
  }
  for (int k : cfg.pool_sizes) {
    if (k < 2) throw InvalidArgument("safety sweep: pool sizes must be >= 2");
  }

  std::vector<SafetySweepResult> results;
  for (std::size_t s = 0; s < cfg.scores.size(); ++s) {
    const ScoreFunction& h = cfg.scores[s];
    std::mt19937_64 rng(derive_seed(cfg.seed, 100 + s));
    SafetySweepResult res;
    res.score = h.name();
    res.min_delta = std::numeric_limits<double>::infinity();
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (int t = 0; t < cfg.trials; ++t) {
      const int n_classes = pick(cfg.class_counts, rng);
      const GammaConvention conv = pick(cfg.gammas, rng);
      const int k = pick(cfg.pool_sizes, rng);
      const EtfFrame frame = make_etf(n_classes, n_classes, gamma_for(conv, n_classes));

      // Skewed class weights so that majorities and ties both occur.
      std::vector<double> weights(static_cast<std::size_t>(n_classes));
      std::exponential_distribution<double> expo(1.0);
      for (auto& w : weights) w = expo(rng);
      std::discrete_distribution<int> class_of(weights.begin(), weights.end());
      std::uniform_int_distribution<int> any_class(0, n_classes - 1);

      std::vector<int> labels(static_cast<std::size_t>(k));
      for (auto& l : labels) l = class_of(rng);
      const int incoming_label = any_class(rng);

      std::vector<UnitVector> pool;
      for (int l : labels) pool.push_back(frame.class_vectors[l]);
      const TrialOutcome exact = run_trial(h, cfg.tie_break, pool, labels,
                                           frame.class_vectors[incoming_label], incoming_label);
      const double delta = exact.after - exact.before;
      ++res.trials;
      res.min_delta = std::min(res.min_delta, delta);
      if (exact.after < exact.before - cfg.tolerance) {
        if (res.violations == 0) {
          res.first_violation =
              fmt::format("trial={} C={} gamma={} k={} labels=[{}] incoming={} delta={:.3e}", t,
                          n_classes, to_string(conv), k, fmt::join(labels, ","), incoming_label,
                          delta);
        }
        ++res.violations;
      }
      if (!exact.evicted_majority) ++res.evicted_non_majority;
      if (exact.incoming_class == exact.evicted_class) {
        ++res.indistinguishable;
        res.indistinguishable_max_abs_delta =
            std::max(res.indistinguishable_max_abs_delta, std::abs(delta));
      }

      if (cfg.noise_sigma > 0.0) {
        auto jitter = [&](const UnitVector& z) {
          Eigen::VectorXd v = z.coords();
          for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += cfg.noise_sigma * gauss(rng);
          return normalize(v);
        };
        std::vector<UnitVector> noisy;
        for (const auto& z : pool) noisy.push_back(jitter(z));
        const TrialOutcome perturbed =
            run_trial(h, cfg.tie_break, noisy, labels,
                      jitter(frame.class_vectors[incoming_label]), incoming_label);
        ++res.noisy_trials;
        if (perturbed.after < perturbed.before - cfg.tolerance) ++res.noisy_violations;
      }
    }
    if (res.trials == 0) res.min_delta = 0.0;
    results.push_back(res);
  }
  return results;
}

// ---------------------------------------------------------------------------

double GradientCell::oracle_rel_err() const {
  return std::max({rel_err_analytic_population, rel_err_population_fd, rel_err_analytic_fd});
}

std::vector<GradientCell> gradient_grid(const GradientGridConfig& cfg) {
  std::vector<GradientCell> cells;
  for (int n_classes : cfg.class_counts) {
    for (double factor : cfg.bias_factors) {
      const BiasSpec spec = BiasSpec::from_bias_factor(n_classes, factor, 0);
      const std::vector<int> counts = exact_population(spec);
      int k = 0;
      for (int n : counts) k += n;
      for (GammaConvention conv : cfg.gammas) {
        const double gamma = gamma_for(conv, n_classes);
        const EtfFrame frame = make_etf(n_classes, n_classes + 1, gamma);
        std::vector<Eigen::VectorXd> coords;
        for (const auto& z : frame.class_vectors) coords.push_back(z.coords());

        for (AnchorCase ac : {AnchorCase::dominant, AnchorCase::minority}) {
          const int anchor = ac == AnchorCase::dominant ? spec.c_max : 1;
          GradientCell cell;
          cell.anchor_case = ac;
          cell.num_classes = n_classes;
          cell.bias_factor = factor;
          cell.convention = conv;
          cell.gamma = gamma;
          cell.population = k;
          cell.analytic = analytic_etf_gradient(spec, k, gamma, ac);

          const Eigen::VectorXd closed = cell.analytic.assemble(frame, anchor, spec.c_max);
          const Eigen::VectorXd population =
              population_infonce_gradient(frame, counts, anchor, 1.0);
          const Eigen::VectorXd numeric = finite_diff_gradient(
              [&](const Eigen::VectorXd& z) {
                return population_infonce_loss(z, coords, counts, anchor, 1.0);
              },
              coords[anchor], cfg.fd_epsilon);

          cell.rel_err_analytic_population = relative_error(closed, population);
          cell.rel_err_population_fd = relative_error(population, numeric);
          cell.rel_err_analytic_fd = relative_error(closed, numeric);
          cell.tangential_norm =
              tangential_component(population, frame.class_vectors[anchor]).norm();
          cells.push_back(cell);
        }
      }
    }
  }
  return cells;
}

void write_gradient_csv(std::ostream& out, const std::vector<GradientCell>& cells) {
  out << "case,num_classes,bias_factor,gamma,coeff_self,coeff_max,oracle_rel_err,tangential_norm\n";
  for (const auto& c : cells) {
    out << fmt::format("{},{},{:g},{:.17g},{:.17g},{:.17g},{:.6e},{:.6e}\n",
                       to_string(c.anchor_case), c.num_classes, c.bias_factor, c.gamma,
                       c.analytic.coeff_self, c.analytic.coeff_max, c.oracle_rel_err(),
                       c.tangential_norm);
  }
}

// ---------------------------------------------------------------------------

std::vector<DriftCell> observation1_report(const DriftGridConfig& cfg) {
  std::vector<DriftCell> cells;
  for (int n_classes : cfg.class_counts) {
    for (double factor : cfg.bias_factors) {
      const BiasSpec spec = BiasSpec::from_bias_factor(n_classes, factor, 0);
      for (GammaConvention conv : cfg.gammas) {
        DriftCell cell;
        cell.num_classes = n_classes;
        cell.bias_factor = factor;
        cell.convention = conv;
        cell.gamma = gamma_for(conv, n_classes);
        const EtfFrame frame = make_etf(n_classes, n_classes + 1, cell.gamma);
        cell.report = etf_drift(frame, spec, cfg.lr, cfg.steps);

        cell.all_minority_decreasing = true;
        double drop = 0.0;
        for (int c = 0; c < n_classes; ++c) {
          if (c == spec.c_max) continue;
          cell.all_minority_decreasing =
              cell.all_minority_decreasing && cell.report.minority_decreasing[c];
          drop += cell.report.dot_with_max.front()[c] - cell.report.dot_with_max.back()[c];
        }
        cell.mean_minority_drop = drop / (n_classes - 1);
        cell.stationary = cell.report.max_abs_drift <= 1e-9;
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

void write_drift_csv(std::ostream& out, const std::vector<DriftCell>& cells) {
  out << "num_classes,bias_factor,gamma,class,step,dot_with_max\n";
  for (const auto& cell : cells) {
    const auto& rows = cell.report.dot_with_max;
    for (int c = 0; c < cell.num_classes; ++c) {
      for (std::size_t t = 0; t < rows.size(); ++t) {
        out << fmt::format("{},{:g},{:.17g},{},{},{:.17g}\n", cell.num_classes, cell.bias_factor,
                           cell.gamma, c, t, rows[t][c]);
      }
    }
  }
}

// ---------------------------------------------------------------------------

std::vector<ThresholdResult> threshold_sweep(const std::vector<ScoreFunction>& scores, int trials,
                                             std::uint64_t seed) {
  std::vector<ThresholdResult> out;
  for (std::size_t s = 0; s < scores.size(); ++s) {
    const ScoreFunction& h = scores[s];
    std::mt19937_64 rng(derive_seed(seed, 200 + s));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> cosine(-1.0, 1.0);
    ThresholdResult r;
    r.score = h.name();
    for (int t = 0; t < trials; ++t) {
      const double alpha = unit(rng);
      const double s_val = cosine(rng);
      const double alpha_star = distinguishability_threshold(h, alpha);
      ++r.trials;
      r.max_inversion_error = std::max(r.max_inversion_error, std::abs(h(alpha_star) - alpha));
      if ((h(s_val) >= alpha) != (s_val >= alpha_star)) {
        if (r.equivalence_failures == 0) {
          r.first_failure = fmt::format("alpha={:.17g} s={:.17g} alpha*={:.17g}", alpha, s_val,
                                        alpha_star);
        }
        ++r.equivalence_failures;
      }
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace duel
