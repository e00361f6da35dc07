#include "duel/cli/commands.hpp"

#include "duel/cli/manifest.hpp"
#include "duel/errors.hpp"
#include "duel/svg.hpp"
#include "duel/sweeps.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace duel::cli {

namespace {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Tables and charts

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
};

Table to_table(const RunMetrics& m) {
  Table t;
  t.header = {"step", "loss", "intra_sim", "inter_sim", "mem_entropy", "mem_max_frac", "collision_rate"};
  t.columns.resize(t.header.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    t.columns[0].push_back(m.step[i]);
    t.columns[1].push_back(m.loss[i]);
    t.columns[2].push_back(m.intra_sim[i]);
    t.columns[3].push_back(m.inter_sim[i]);
    t.columns[4].push_back(m.mem_entropy[i]);
    t.columns[5].push_back(m.mem_max_frac[i]);
    t.columns[6].push_back(m.collision_rate[i]);
  }
  return t;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument(fmt::format("cannot read '{}'", path));
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument(fmt::format("'{}' is empty", path));
  t.header = split(line);
  t.columns.resize(t.header.size());
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw InvalidArgument(fmt::format("{}:{}: expected {} fields, got {}", path, row,
                                        t.header.size(), cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cells[c], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cells[c].size()) {
        throw InvalidArgument(fmt::format("{}:{}: '{}' is not a number", path, row, cells[c]));
      }
      t.columns[c].push_back(v);
    }
  }
  return t;
}

// One chart per column after the first, one series per table.
void write_charts(Manifest& manifest, const std::vector<std::pair<std::string, Table>>& tables) {
  if (tables.empty()) return;
  const auto& header = tables.front().second.header;
  for (const auto& [name, t] : tables) {
    if (t.header != header) throw InvalidArgument(fmt::format("'{}': header differs", name));
  }
  for (std::size_t c = 1; c < header.size(); ++c) {
    std::vector<Series> series;
    for (const auto& [name, t] : tables) series.push_back({name, t.columns[0], t.columns[c]});
    manifest.write_file(header[c] + ".svg", line_chart_svg(header[c], header[0], series));
  }
}

// ---------------------------------------------------------------------------
// Verification reports

struct Check {
  Check(std::string name_, double tolerance_, double measured_ = 0.0, bool passed_ = true)
      : name(std::move(name_)), tolerance(tolerance_), measured(measured_), passed(passed_) {}

  std::string name;
  double tolerance;
  double measured;
  bool passed;
  bool asserted = true;
  std::string detail;
};

Json check_json(const Check& c) {
  Json j;
  j["name"] = c.name;
  j["tolerance"] = c.tolerance;
  j["measured"] = c.measured;
  j["passed"] = c.passed;
  j["asserted"] = c.asserted;
  if (!c.detail.empty()) j["detail"] = c.detail;
  return j;
}

int finish_report(Manifest& manifest, std::string_view kind, const std::vector<Check>& checks,
                  std::ostream& log) {
  bool ok = true;
  Json list = Json::array();
  for (const auto& c : checks) {
    const char* tag = c.passed ? "ok  " : (c.asserted ? "FAIL" : "info");
    fmt::print(log, "{} {:<40} measured={:<12.4e} tolerance={:.1e}{}\n", tag, c.name, c.measured,
               c.tolerance, c.detail.empty() || c.passed ? "" : "  " + c.detail);
    if (c.asserted && !c.passed) ok = false;
    list.push_back(check_json(c));
  }
  Json report;
  report["kind"] = kind;
  report["passed"] = ok;
  report["checks"] = std::move(list);
  manifest.write_file("report.json", report.dump(2) + "\n");
  fmt::print(log, "manifest {}\n", manifest.finish());
  return ok ? kExitOk : kExitVerificationFailure;
}

std::string cell_tuple(const GradientCell& c) {
  return fmt::format("case={} C={} bias={:g} gamma={}", to_string(c.anchor_case), c.num_classes,
                     c.bias_factor, to_string(c.convention));
}

int verify_gradients(const RunConfig& cfg, Manifest& manifest, std::ostream& log) {
  const VerifySpec& v = cfg.verify;
  GradientGridConfig gcfg;
  gcfg.fd_epsilon = v.fd_epsilon;
  const auto cells = gradient_grid(gcfg);

  std::vector<Check> checks;
  auto worst = [&](const char* name, auto value) {
    Check c{name, v.gradient_tolerance};
    for (const auto& cell : cells) {
      if (value(cell) >= c.measured) {
        c.measured = value(cell);
        c.detail = cell_tuple(cell);
      }
    }
    c.passed = c.measured <= c.tolerance;
    checks.push_back(c);
  };
  worst("analytic_vs_population", [](const GradientCell& c) { return c.rel_err_analytic_population; });
  worst("population_vs_finite_difference", [](const GradientCell& c) { return c.rel_err_population_fd; });
  worst("analytic_vs_finite_difference", [](const GradientCell& c) { return c.rel_err_analytic_fd; });

  // A tangential-free gradient at the uniform frame needs the class vectors to
  // sum to zero, which only the simplex gamma provides.
  for (auto conv : {GammaConvention::simplex, GammaConvention::reciprocal}) {
    Check c{"uniform_stationarity_" + to_string(conv), v.stationarity_tolerance};
    c.asserted = conv == GammaConvention::simplex;
    for (const auto& cell : cells) {
      if (cell.bias_factor != 1.0 || cell.convention != conv) continue;
      if (cell.tangential_norm >= c.measured) {
        c.measured = cell.tangential_norm;
        c.detail = cell_tuple(cell);
      }
    }
    c.passed = c.measured <= c.tolerance;
    if (!c.asserted) c.detail += " (frame resultant is nonzero at this gamma)";
    checks.push_back(c);
  }

  DriftGridConfig dcfg;
  dcfg.steps = v.drift_steps;
  dcfg.lr = v.drift_lr;
  const auto drift = observation1_report(dcfg);

  Check minority{"minority_drift_toward_opposite", 0.0};
  std::map<std::pair<int, GammaConvention>, std::map<double, double>> drops;
  for (const auto& d : drift) {
    if (d.bias_factor == 1.0) continue;
    drops[{d.num_classes, d.convention}][d.bias_factor] = d.mean_minority_drop;
    if (!d.all_minority_decreasing) {
      if (minority.measured == 0.0) {
        minority.detail = fmt::format("C={} bias={:g} gamma={}", d.num_classes, d.bias_factor,
                                      to_string(d.convention));
      }
      minority.measured += 1.0;
    }
  }
  minority.passed = minority.measured == 0.0;
  checks.push_back(minority);

  Check ordering{"drift_monotone_in_bias", 0.0};
  for (const auto& [key, by_bias] : drops) {
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& [bias, drop] : by_bias) {
      if (!(drop > prev)) {
        if (ordering.measured == 0.0) {
          ordering.detail = fmt::format("C={} gamma={} bias={:g}", key.first,
                                        to_string(key.second), bias);
        }
        ordering.measured += 1.0;
      }
      prev = drop;
    }
  }
  ordering.passed = ordering.measured == 0.0;
  checks.push_back(ordering);

  for (auto conv : {GammaConvention::simplex, GammaConvention::reciprocal}) {
    Check c{"uniform_no_drift_" + to_string(conv), v.stationarity_tolerance};
    c.asserted = conv == GammaConvention::simplex;
    for (const auto& d : drift) {
      if (d.bias_factor != 1.0 || d.convention != conv) continue;
      if (d.report.max_abs_drift >= c.measured) {
        c.measured = d.report.max_abs_drift;
        c.detail = fmt::format("C={}", d.num_classes);
      }
    }
    c.passed = c.measured <= c.tolerance;
    checks.push_back(c);
  }

  std::ostringstream grad_csv;
  write_gradient_csv(grad_csv, cells);
  manifest.write_file("gradients.csv", grad_csv.str());
  std::ostringstream drift_csv;
  write_drift_csv(drift_csv, drift);
  manifest.write_file("drift.csv", drift_csv.str());

  // Class-1 trajectory of the largest simplex frame, one line per bias.
  int largest = 0;
  for (const auto& d : drift) largest = std::max(largest, d.num_classes);
  std::vector<Series> series;
  for (const auto& d : drift) {
    if (d.num_classes != largest || d.convention != GammaConvention::simplex) continue;
    Series s{fmt::format("x{:g}", d.bias_factor), {}, {}};
    for (std::size_t t = 0; t < d.report.dot_with_max.size(); ++t) {
      s.x.push_back(static_cast<double>(t));
      s.y.push_back(d.report.dot_with_max[t][1]);
    }
    series.push_back(std::move(s));
  }
  manifest.write_file("drift.svg",
                      line_chart_svg(fmt::format("minority z.z_max, C={}", largest), "step", series));

  return finish_report(manifest, "gradients", checks, log);
}

std::vector<ScoreFunction> shipped_scores(const RunConfig& cfg) {
  return {ScoreFunction::linear(), ScoreFunction::gaussian(cfg.score_tau), ScoreFunction::quadratic()};
}

int verify_safety(const RunConfig& cfg, Manifest& manifest, std::ostream& log) {
  SafetySweepConfig scfg;
  scfg.trials = cfg.verify.safety_trials;
  scfg.scores = shipped_scores(cfg);
  scfg.noise_sigma = cfg.verify.safety_noise_sigma;
  scfg.tie_break = cfg.memory.tie_break;
  scfg.seed = cfg.seed.value_or(0);
  const auto results = theorem1_sweep(scfg);

  std::vector<Check> checks;
  std::string csv =
      "score,trials,violations,min_delta,indistinguishable,indistinguishable_max_abs_delta,"
      "evicted_non_majority,noisy_trials,noisy_violations\n";
  for (const auto& r : results) {
    Check diversity{"diversity_never_decreases_" + r.score, 0.0,
                    static_cast<double>(r.violations), r.violations == 0};
    diversity.detail = r.violations == 0 ? fmt::format("min delta {:.3e}", r.min_delta)
                                         : r.first_violation;
    checks.push_back(diversity);

    Check same{"indistinguishable_delta_" + r.score, scfg.tolerance,
               r.indistinguishable_max_abs_delta,
               r.indistinguishable_max_abs_delta <= scfg.tolerance};
    same.detail = fmt::format("{} of {} trials", r.indistinguishable, r.trials);
    checks.push_back(same);

    Check noisy{"perturbed_violation_rate_" + r.score, 0.0,
                r.noisy_trials ? static_cast<double>(r.noisy_violations) / r.noisy_trials : 0.0};
    noisy.asserted = false;
    noisy.passed = r.noisy_violations == 0;
    checks.push_back(noisy);

    csv += fmt::format("{},{},{},{:.6e},{},{:.6e},{},{},{}\n", r.score, r.trials, r.violations,
                       r.min_delta, r.indistinguishable, r.indistinguishable_max_abs_delta,
                       r.evicted_non_majority, r.noisy_trials, r.noisy_violations);
  }
  manifest.write_file("safety.csv", csv);
  return finish_report(manifest, "safety", checks, log);
}

int verify_threshold(const RunConfig& cfg, Manifest& manifest, std::ostream& log) {
  const auto results =
      threshold_sweep(shipped_scores(cfg), cfg.verify.threshold_trials, cfg.seed.value_or(0));
  std::vector<Check> checks;
  for (const auto& r : results) {
    Check eq{"threshold_equivalence_" + r.score, 0.0, static_cast<double>(r.equivalence_failures),
             r.equivalence_failures == 0};
    eq.detail = r.first_failure;
    checks.push_back(eq);
    checks.push_back(Check{"threshold_inversion_" + r.score, 1e-9, r.max_inversion_error,
                           r.max_inversion_error <= 1e-9});
  }
  return finish_report(manifest, "threshold", checks, log);
}

// ---------------------------------------------------------------------------
// Benchmark

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct SampleSource {
  BiasedStream stream;
  SampleSource(int dim, double sigma, std::uint64_t seed)
      : stream(make_cfg(dim, sigma), seed) {}

  static StreamConfig make_cfg(int dim, double sigma) {
    StreamConfig sc;
    sc.bias = BiasSpec::from_bias_factor(10, 27.0);
    sc.ambient_dim = dim;
    sc.embed_dim = dim;
    sc.noise_sigma = sigma;
    return sc;
  }

  Sample next(bool with_raw) {
    StreamDraw d = stream.next();
    Sample s{normalize(d.anchor), d.label, std::nullopt};
    if (with_raw) s.raw = std::move(d.anchor);
    return s;
  }
};

}  // namespace

// ---------------------------------------------------------------------------

RunConfig resolve_config(const ConfigSources& src) {
  RunConfig cfg = src.config_path ? load_config(*src.config_path) : RunConfig{};
  for (const auto& a : src.assignments) apply_assignment(cfg, a);
  if (src.seed) cfg.seed = *src.seed;
  if (src.out) cfg.output_dir = *src.out;
  if (src.policy) {
    apply_override(cfg, "memory.policy", *src.policy);
    cfg.grid.policies.clear();
  }
  if (src.score) apply_override(cfg, "score.kind", *src.score);
  if (src.bias_factor) {
    cfg.bias_factor = *src.bias_factor;
    cfg.grid.bias_factors.clear();
  }
  return cfg;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const std::uint64_t seed = cfg.require_seed();

  struct Cell {
    ExperimentConfig exp;
    std::string stem;
    std::optional<RunMetrics> metrics;
    std::string divergence;
    std::exception_ptr failure;
  };
  std::vector<Cell> cells;
  const auto policies = cfg.grid.policies.empty() ? std::vector<Policy>{cfg.memory.policy}
                                                  : cfg.grid.policies;
  const auto biases = cfg.grid.bias_factors.empty() ? std::vector<double>{cfg.bias_factor}
                                                    : cfg.grid.bias_factors;
  for (Policy p : policies) {
    for (double b : biases) {
      for (int s = 0; s < cfg.grid.num_seeds; ++s) {
        const std::uint64_t run_seed = seed + static_cast<std::uint64_t>(s);
        cells.push_back({cfg.experiment(p, b, run_seed), run_file_stem(p, b, run_seed), {}, {}, {}});
      }
    }
  }

  Manifest manifest(cfg.output_dir, "simulate");
  manifest.set_seed(seed);
  const std::string snapshot = to_yaml(cfg);
  manifest.set_config(snapshot);
  manifest.write_file("config.yaml", snapshot);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      Cell& cell = cells[i];
      try {
        std::ostringstream evictions;
        std::optional<EvictionCsvWriter> writer;
        ExperimentHooks hooks;
        if (cfg.eviction_log) {
          writer.emplace(evictions, cell.exp.memory.policy);
          hooks.eviction_log = &*writer;
        }
        cell.metrics = run_experiment(cell.exp, hooks);
        std::ostringstream csv;
        write_metrics_csv(csv, *cell.metrics);
        manifest.write_file(cell.stem + ".csv", csv.str());
        if (cfg.eviction_log) manifest.write_file(cell.stem + "_evictions.csv", evictions.str());
      } catch (const Divergence& e) {
        cell.divergence = e.what();
      } catch (...) {
        cell.failure = std::current_exception();
      }
    }
  };
  const auto n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.grid.threads), cells.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (const auto& cell : cells) {
    if (cell.failure) std::rethrow_exception(cell.failure);
  }
  bool diverged = false;
  std::vector<std::pair<std::string, Table>> tables;
  for (const auto& cell : cells) {
    if (!cell.divergence.empty()) {
      fmt::print(log, "{}: diverged: {}\n", cell.stem, cell.divergence);
      diverged = true;
      continue;
    }
    const RunMetrics& m = *cell.metrics;
    const std::size_t last = m.size() - 1;
    fmt::print(log,
               "{}: step={} loss={:.4f} intra={:.4f} inter={:.4f} mem_max_frac={:.3f} "
               "collision_rate={:.4f}\n",
               cell.stem, m.step[last], m.loss[last], m.intra_sim[last], m.inter_sim[last],
               m.mem_max_frac[last], m.collision_rate[last]);
    tables.emplace_back(cell.stem, to_table(m));
  }
  if (cfg.plot_svg) write_charts(manifest, tables);
  fmt::print(log, "manifest {}\n", manifest.finish());
  return diverged ? kExitDivergence : kExitOk;
}

int cmd_verify(std::string_view kind, const RunConfig& cfg, std::ostream& log) {
  if (kind != "gradients" && kind != "safety" && kind != "threshold") {
    throw ConfigError(fmt::format("unknown verification kind '{}'", kind));
  }
  Manifest manifest(cfg.output_dir, fmt::format("verify {}", kind));
  manifest.set_seed(cfg.seed.value_or(0));
  const std::string snapshot = to_yaml(cfg);
  manifest.set_config(snapshot);
  manifest.write_file("config.yaml", snapshot);
  if (kind == "gradients") return verify_gradients(cfg, manifest, log);
  if (kind == "safety") return verify_safety(cfg, manifest, log);
  return verify_threshold(cfg, manifest, log);
}

int cmd_bench(const RunConfig& cfg, std::ostream& log) {
  const BenchSpec& b = cfg.bench;
  const std::uint64_t seed = cfg.seed.value_or(0);
  const ScoreFunction h = ScoreFunction::parse(cfg.score_kind, cfg.score_tau);
  Manifest manifest(cfg.output_dir, "bench");
  manifest.set_seed(seed);
  const std::string snapshot = to_yaml(cfg);
  manifest.set_config(snapshot);
  manifest.write_file("config.yaml", snapshot);

  Json rows = Json::array();
  bool ok = true;
  fmt::print(log, "{:>6} {:>14} {:>14} {:>9} {:>12} {:>12}\n", "k", "incr ops/s", "full ops/s",
             "speedup", "max |dN|", "refresh s");

  for (int k : b.ks) {
    if (k < 2) throw ConfigError("bench.ks: every k must be >= 2");
    const auto cap = static_cast<std::size_t>(k);
    SampleSource source(b.dim, cfg.noise_sigma, derive_seed(seed, 300 + cap));

    // Equivalence first: drift of the incremental counts after many
    // replacements with no intermediate resync.
    MemoryOptions opts = cfg.memory;
    opts.capacity = cap;
    opts.policy = Policy::duel_naive;
    opts.variant = MemoryVariant::stale_embedding;
    opts.maintenance = Maintenance::incremental;
    opts.resync_interval = std::numeric_limits<std::size_t>::max();
    DuelMemory checked(opts, h);
    for (int i = 0; i < k + b.precheck_ops; ++i) checked.insert_replace(source.next(false));
    DuelMemory reference = checked;
    reference.resynchronize();
    double max_delta = 0.0;
    for (std::size_t j = 0; j < checked.size(); ++j) {
      max_delta = std::max(max_delta,
                           std::abs(checked.cached_counts()[j] - reference.cached_counts()[j]));
    }
    if (!(max_delta <= b.equivalence_tolerance)) {
      fmt::print(log, "k={}: incremental counts drifted by {:.3e} after {} ops, aborting\n", k,
                 max_delta, b.precheck_ops);
      return finish_report(manifest, "bench",
                           {Check{fmt::format("equivalence_k{}", k), b.equivalence_tolerance,
                                  max_delta, false}},
                           log);
    }

    std::vector<Sample> fill;
    std::vector<Sample> incoming;
    for (int i = 0; i < k; ++i) fill.push_back(source.next(true));
    for (int i = 0; i < b.timed_ops; ++i) incoming.push_back(source.next(false));

    MemoryOptions inc_opts = cfg.memory;
    inc_opts.capacity = cap;
    inc_opts.policy = Policy::duel_naive;
    inc_opts.variant = MemoryVariant::stale_embedding;
    inc_opts.maintenance = Maintenance::incremental;
    DuelMemory inc(inc_opts, h);
    for (const auto& s : fill) inc.insert_replace(Sample{s.embedding, s.label, std::nullopt});
    auto t0 = Clock::now();
    for (auto s : incoming) inc.insert_replace(std::move(s));
    const double inc_rate = b.timed_ops / seconds_since(t0);

    MemoryOptions full_opts = inc_opts;
    full_opts.maintenance = Maintenance::full_recompute;
    DuelMemory full(full_opts, h);
    for (const auto& s : fill) full.insert_replace(Sample{s.embedding, s.label, std::nullopt});
    const int full_ops = std::min(b.full_ops, b.timed_ops);
    t0 = Clock::now();
    for (int i = 0; i < full_ops; ++i) full.insert_replace(incoming[static_cast<std::size_t>(i)]);
    const double full_rate = full_ops / seconds_since(t0);

    // Re-encode variant: one refresh re-embeds every slot and resyncs.
    MemoryOptions re_opts = inc_opts;
    re_opts.variant = MemoryVariant::re_encode;
    DuelMemory re(re_opts, h);
    for (const auto& s : fill) re.insert_replace(s);
    Encoder encoder(b.dim, b.dim, derive_seed(seed, 400 + cap));
    const EncodeFn encode = encoder.encode_fn();
    t0 = Clock::now();
    re.refresh_embeddings(encode);
    const double refresh_s = seconds_since(t0);

    const double speedup = inc_rate / full_rate;
    const bool asserted = k >= b.floor_min_k;
    const bool passed = !asserted || speedup >= b.min_speedup;
    ok = ok && passed;
    fmt::print(log, "{:>6} {:>14.1f} {:>14.2f} {:>8.1f}x {:>12.3e} {:>12.4f}{}\n", k, inc_rate,
               full_rate, speedup, max_delta, refresh_s,
               asserted ? (passed ? "  floor ok" : "  BELOW FLOOR") : "");

    Json row;
    row["k"] = k;
    row["dim"] = b.dim;
    row["incremental_ops_per_s"] = inc_rate;
    row["full_recompute_ops_per_s"] = full_rate;
    row["speedup"] = speedup;
    row["speedup_floor"] = b.min_speedup;
    row["speedup_asserted"] = asserted;
    row["equivalence_ops"] = b.precheck_ops;
    row["equivalence_max_abs_delta"] = max_delta;
    row["re_encode_refresh_s"] = refresh_s;
    row["passed"] = passed;
    rows.push_back(row);
  }

  Json doc;
  doc["passed"] = ok;
  doc["rows"] = std::move(rows);
  manifest.write_file("bench.json", doc.dump(2) + "\n");
  fmt::print(log, "manifest {}\n", manifest.finish());
  return ok ? kExitOk : kExitVerificationFailure;
}

int cmd_plot(const std::vector<std::string>& csv_paths, const std::string& out_dir,
             std::ostream& log) {
  if (csv_paths.empty()) throw InvalidArgument("plot: no input files");
  std::vector<std::pair<std::string, Table>> tables;
  for (const auto& path : csv_paths) {
    tables.emplace_back(std::filesystem::path(path).stem().string(), read_csv(path));
  }
  Manifest manifest(out_dir, "plot");
  write_charts(manifest, tables);
  fmt::print(log, "manifest {}\n", manifest.finish());
  return kExitOk;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Duplicate-eliminating memory for contrastive learning: simulations and checks"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  ConfigSources src;
  auto add_config_flags = [&src](CLI::App* sub) {
    sub->add_option("--config", src.config_path, "YAML config file");
    sub->add_option("--set", src.assignments, "Override a config key, key=value (repeatable)");
    sub->add_option("--seed", src.seed, "Run seed");
    sub->add_option("--out", src.out, "Output directory");
    sub->add_option("--policy", src.policy, "duel-naive | fifo | reservoir");
    sub->add_option("--score", src.score, "linear | gaussian | quadratic");
    sub->add_option("--bias-factor", src.bias_factor, "Dominant-to-minority class ratio");
  };

  auto* simulate = app.add_subcommand("simulate", "Train on a biased stream, write metrics CSVs");
  add_config_flags(simulate);

  std::string verify_kind;
  auto* verify = app.add_subcommand("verify", "Run an oracle suite: gradients, safety, threshold");
  verify->add_option("kind", verify_kind, "gradients | safety | threshold")
      ->required()
      ->check(CLI::IsMember({"gradients", "safety", "threshold"}));
  add_config_flags(verify);

  auto* bench = app.add_subcommand("bench", "Time incremental vs full duplicate-count upkeep");
  add_config_flags(bench);

  std::vector<std::string> plot_inputs;
  std::string plot_out = "plots";
  auto* plot = app.add_subcommand("plot", "Line charts from metrics CSVs");
  plot->add_option("csv", plot_inputs, "Metrics CSV files")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (*plot) return cmd_plot(plot_inputs, plot_out, out);
    const RunConfig cfg = resolve_config(src);
    if (*simulate) return cmd_simulate(cfg, out);
    if (*verify) return cmd_verify(verify_kind, cfg, out);
    return cmd_bench(cfg, out);
  } catch (const ConfigError& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kExitConfigError;
  } catch (const InvalidArgument& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kExitConfigError;
  } catch (const FrameInfeasible& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kExitConfigError;
  } catch (const Divergence& e) {
    fmt::print(err, "diverged: {}\n", e.what());
    return kExitDivergence;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitRuntimeError;
  }
}

}  // namespace duel::cli
