#include "duel/cli/config.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <yaml-cpp/yaml.h>

#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace duel::cli {

std::string to_string(Maintenance m) {
  return m == Maintenance::incremental ? "incremental" : "full-recompute";
}

std::string to_string(TieBreak t) {
  return t == TieBreak::similarity_then_oldest ? "similarity-then-oldest" : "oldest";
}

Maintenance parse_maintenance(std::string_view name) {
  if (name == "incremental") return Maintenance::incremental;
  if (name == "full-recompute") return Maintenance::full_recompute;
  throw InvalidArgument(fmt::format("unknown maintenance mode '{}'", name));
}

TieBreak parse_tie_break(std::string_view name) {
  if (name == "similarity-then-oldest") return TieBreak::similarity_then_oldest;
  if (name == "oldest") return TieBreak::oldest;
  throw InvalidArgument(fmt::format("unknown tie-break '{}'", name));
}

namespace {

using Setter = std::function<void(RunConfig&, const YAML::Node&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Entry {
  std::string key;
  Setter set;
  Getter get;
};

std::string fmt_double(double v) {
  std::string s = fmt::format("{}", v);
  // keep reals recognizable as reals on re-read
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

template <class T>
T scalar(const YAML::Node& node, const std::string& key, const char* what) {
  if (!node.IsScalar()) throw ConfigError(fmt::format("{}: expected {}", key, what));
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(fmt::format("{}: expected {}, got '{}'", key, what, node.Scalar()));
  }
}

int as_int(const YAML::Node& n, const std::string& key) { return scalar<int>(n, key, "an integer"); }
double as_real(const YAML::Node& n, const std::string& key) { return scalar<double>(n, key, "a number"); }
bool as_bool(const YAML::Node& n, const std::string& key) { return scalar<bool>(n, key, "true or false"); }
std::string as_str(const YAML::Node& n, const std::string& key) {
  return scalar<std::string>(n, key, "a string");
}

std::uint64_t as_u64(const YAML::Node& n, const std::string& key) {
  std::string text = as_str(n, key);
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError(fmt::format("{}: expected a non-negative integer, got '{}'", key, text));
  }
  return scalar<std::uint64_t>(n, key, "a non-negative integer");
}

int as_positive(const YAML::Node& n, const std::string& key) {
  int v = as_int(n, key);
  if (v < 1) throw ConfigError(fmt::format("{}: must be >= 1, got {}", key, v));
  return v;
}

template <class T, class F>
std::vector<T> as_list(const YAML::Node& n, const std::string& key, F item) {
  std::vector<T> out;
  if (n.IsScalar()) {
    out.push_back(item(n, key));
    return out;
  }
  if (!n.IsSequence()) throw ConfigError(fmt::format("{}: expected a list", key));
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(item(n[i], fmt::format("{}[{}]", key, i)));
  return out;
}

template <class F>
auto enum_of(F parse) {
  return [parse](const YAML::Node& n, const std::string& key) {
    std::string text = as_str(n, key);
    try {
      return parse(text);
    } catch (const InvalidArgument& e) {
      throw ConfigError(fmt::format("{}: {}", key, e.what()));
    }
  };
}

template <class T, class F>
std::string list_text(const std::vector<T>& v, F show) {
  std::vector<std::string> parts;
  for (const auto& x : v) parts.push_back(show(x));
  return fmt::format("[{}]", fmt::join(parts, ", "));
}

#define INT_FIELD(k, member) \
  Entry{k, [](RunConfig& c, const YAML::Node& n, const std::string& key) { c.member = as_int(n, key); }, \
        [](const RunConfig& c) { return std::to_string(c.member); }}
#define POS_FIELD(k, member) \
  Entry{k, [](RunConfig& c, const YAML::Node& n, const std::string& key) { c.member = as_positive(n, key); }, \
        [](const RunConfig& c) { return std::to_string(c.member); }}
#define REAL_FIELD(k, member) \
  Entry{k, [](RunConfig& c, const YAML::Node& n, const std::string& key) { c.member = as_real(n, key); }, \
        [](const RunConfig& c) { return fmt_double(c.member); }}
#define BOOL_FIELD(k, member) \
  Entry{k, [](RunConfig& c, const YAML::Node& n, const std::string& key) { c.member = as_bool(n, key); }, \
        [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }}

const std::vector<Entry>& schema() {
  static const std::vector<Entry> entries = {
      Entry{"seed",
            [](RunConfig& c, const YAML::Node& n, const std::string& key) {
              if (n.IsNull()) {
                c.seed.reset();
              } else {
                c.seed = as_u64(n, key);
              }
            },
            [](const RunConfig& c) { return c.seed ? std::to_string(*c.seed) : std::string("~"); }},
      Entry{"output_dir",
            [](RunConfig& c, const YAML::Node& n, const std::string& key) { c.output_dir = as_str(n, key); },
            [](const RunConfig& c) { return YAML::Dump(YAML::Node(c.output_dir)); }},

      POS_FIELD("stream.num_classes", num_classes),
      REAL_FIELD("stream.bias_factor", bias_factor),
      INT_FIELD("stream.dominant_class", dominant_class),
      POS_FIELD("stream.ambient_dim", ambient_dim),
      POS_FIELD("stream.embed_dim", embed_dim),
      Entry{"stream.prototype_separation",
            [](RunConfig& c, const YAML::Node& n, const std::string& key) {
              if (n.IsNull()) {
                c.prototype_separation.reset();
              } else {
                c.prototype_separation = as_real(n, key);
              }
            },
            [](const RunConfig& c) {
              return c.prototype_separation ? fmt_double(*c.prototype_separation) : std::string("~");
            }},
      REAL_FIELD("stream.noise_sigma", noise_sigma),
      POS_FIELD("stream.steps", steps),
      POS_FIELD("stream.batch", batch),

      Entry{"memory.policy",
            [](RunConfig& c, const YAML::Node& n, const std::string& key) {
              c.memory.policy = enum_of(parse_policy)(n, key);
            },
            [](const RunConfig& c) { return to_string(c.memory.policy); }},
      Entry{"memory.capacity",
            [](RunConfig& c, const YAML::Node& n, const std::string& key) {
              c.memory.capacity = static_cast<std::size_t>(as_positive(n, key));
            },
            [](const RunConfig& c) { return std::to_string(c.memory.capacity); }},
      Entry{"memory.variant",
            [](RunConfig& c, const YAML::Node& n, const std::string& key) {
              c.memory.variant = enum_of(parse_variant)(n, key);
            },
            [](const RunConfig& c) { return to_string(c.memory.variant); }},
      Entry{"memory.maintenance",
            [](RunConfig& c, const YAML::Node& n, const std::string& key) {
              c.memory.maintenance = enum_of(parse_maintenance)(n, key);
            },
            [](const RunConfig& c) { return to_string(c.memory.maintenance); }},
      BOOL_FIELD("memory.include_incoming", memory.include_incoming),
      Entry{"memory.tie_break",
            [](RunConfig& c, const YAML::Node& n, const std::string& key) {
              c.memory.tie_break = enum_of(parse_tie_break)(n, key);
            },
            [](const RunConfig& c) { return to_string(c.memory.tie_break); }},
      Entry{"memory.resync_interval",
            [](RunConfig& c, const YAML::Node& n, const std::string& key) {
              c.memory.resync_interval = static_cast<std::size_t>(as_positive(n, key));
            },
            [](const RunConfig& c) { return std::to_string(c.memory.resync_interval); }},
      BOOL_FIELD("memory.eviction_log", eviction_log),

      Entry{"score.kind",
            [](RunConfig& c, const YAML::Node& n, const std::string& key) {
              std::string kind = as_str(n, key);
              try {
                ScoreFunction::parse(kind, 1.0);
              } catch (const InvalidArgument& e) {
                throw ConfigError(fmt::format("{}: {}", key, e.what()));
              }
              c.score_kind = kind;
            },
            [](const RunConfig& c) { return c.score_kind; }},
      REAL_FIELD("score.tau", score_tau),

      Entry{"training.loss",
            [](RunConfig& c, const YAML::Node& n, const std::string& key) {
              c.loss = enum_of(parse_loss)(n, key);
            },
            [](const RunConfig& c) { return to_string(c.loss); }},
      REAL_FIELD("training.temperature", temperature),
      REAL_FIELD("training.lr", lr),
      POS_FIELD("training.eval_every", eval_every),
      BOOL_FIELD("training.batch_negatives", batch_negatives),
      POS_FIELD("training.probe_per_class", probe_per_class),

      Entry{"grid.policies",
            [](RunConfig& c, const YAML::Node& n, const std::string& key) {
              c.grid.policies = as_list<Policy>(n, key, enum_of(parse_policy));
            },
            [](const RunConfig& c) {
              return list_text(c.grid.policies, [](Policy p) { return to_string(p); });
            }},
      Entry{"grid.bias_factors",
            [](RunConfig& c, const YAML::Node& n, const std::string& key) {
              c.grid.bias_factors = as_list<double>(n, key, as_real);
            },
            [](const RunConfig& c) { return list_text(c.grid.bias_factors, fmt_double); }},
      POS_FIELD("grid.num_seeds", grid.num_seeds),
      POS_FIELD("grid.threads", grid.threads),

      POS_FIELD("verify.safety_trials", verify.safety_trials),
      REAL_FIELD("verify.safety_noise_sigma", verify.safety_noise_sigma),
      POS_FIELD("verify.threshold_trials", verify.threshold_trials),
      REAL_FIELD("verify.gradient_tolerance", verify.gradient_tolerance),
      REAL_FIELD("verify.stationarity_tolerance", verify.stationarity_tolerance),
      REAL_FIELD("verify.fd_epsilon", verify.fd_epsilon),
      POS_FIELD("verify.drift_steps", verify.drift_steps),
      REAL_FIELD("verify.drift_lr", verify.drift_lr),

      Entry{"bench.ks",
            [](RunConfig& c, const YAML::Node& n, const std::string& key) {
              c.bench.ks = as_list<int>(n, key, as_positive);
            },
            [](const RunConfig& c) {
              return list_text(c.bench.ks, [](int k) { return std::to_string(k); });
            }},
      POS_FIELD("bench.dim", bench.dim),
      POS_FIELD("bench.precheck_ops", bench.precheck_ops),
      POS_FIELD("bench.timed_ops", bench.timed_ops),
      POS_FIELD("bench.full_ops", bench.full_ops),
      REAL_FIELD("bench.min_speedup", bench.min_speedup),
      POS_FIELD("bench.floor_min_k", bench.floor_min_k),
      REAL_FIELD("bench.equivalence_tolerance", bench.equivalence_tolerance),

      BOOL_FIELD("plot.svg", plot_svg),
  };
  return entries;
}

#undef INT_FIELD
#undef POS_FIELD
#undef REAL_FIELD
#undef BOOL_FIELD

const Entry* find_entry(const std::string& key) {
  for (const auto& e : schema()) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

bool is_section(const std::string& key) {
  const std::string prefix = key + ".";
  for (const auto& e : schema()) {
    if (e.key.compare(0, prefix.size(), prefix) == 0) return true;
  }
  return false;
}

void apply_node(RunConfig& cfg, const YAML::Node& node, const std::string& prefix) {
  for (const auto& kv : node) {
    const std::string name = kv.first.as<std::string>();
    const std::string key = prefix.empty() ? name : prefix + "." + name;
    if (const Entry* e = find_entry(key)) {
      e->set(cfg, kv.second, key);
    } else if (is_section(key)) {
      if (kv.second.IsNull()) continue;
      if (!kv.second.IsMap()) throw ConfigError(fmt::format("{}: expected a section", key));
      apply_node(cfg, kv.second, key);
    } else {
      throw ConfigError(fmt::format("unknown config key '{}'", key));
    }
  }
}

YAML::Node load_yaml(const std::string& text, const std::string& where) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("{}: {}", where, e.what()));
  }
}

}  // namespace

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
  const Entry* e = find_entry(key);
  if (e == nullptr) throw ConfigError(fmt::format("unknown config key '{}'", key));
  e->set(cfg, load_yaml(value, key), key);
}

void apply_assignment(RunConfig& cfg, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(fmt::format("override '{}' is not of the form key=value", assignment));
  }
  apply_override(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

RunConfig parse_config(const std::string& yaml_text) {
  RunConfig cfg;
  YAML::Node root = load_yaml(yaml_text, "config");
  if (root.IsNull()) return cfg;
  if (!root.IsMap()) throw ConfigError("config: top level must be a mapping");
  apply_node(cfg, root, "");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config file '{}'", path));
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string to_yaml(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& e : schema()) {
    auto dot = e.key.find('.');
    std::string value = e.get(cfg);
    if (dot == std::string::npos) {
      out += fmt::format("{}: {}\n", e.key, value);
      continue;
    }
    std::string sec = e.key.substr(0, dot);
    if (sec != section) {
      out += fmt::format("{}:\n", sec);
      section = sec;
    }
    out += fmt::format("  {}: {}\n", e.key.substr(dot + 1), value);
  }
  return out;
}

ExperimentConfig RunConfig::experiment(Policy policy, double bias, std::uint64_t run_seed) const {
  ExperimentConfig e;
  try {
    e.stream.bias = BiasSpec::from_bias_factor(num_classes, bias, dominant_class);
    e.stream.ambient_dim = ambient_dim;
    e.stream.embed_dim = embed_dim;
    e.stream.prototype_separation = prototype_separation;
    e.stream.noise_sigma = noise_sigma;
    e.stream.steps = steps;
    e.stream.batch = batch;
    e.stream.seed = run_seed;
    e.memory = memory;
    e.memory.policy = policy;
    e.score = ScoreFunction::parse(score_kind, score_tau);
    e.loss = loss;
    e.temperature = temperature;
    e.lr = lr;
    e.eval_every = eval_every;
    e.batch_negatives = batch_negatives;
    e.probe_per_class = probe_per_class;
    e.validate();
  } catch (const InvalidArgument& err) {
    throw ConfigError(fmt::format("invalid config: {}", err.what()));
  }
  return e;
}

ExperimentConfig RunConfig::experiment() const {
  return experiment(memory.policy, bias_factor, require_seed());
}

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ConfigError("seed: required (set it in the config or pass --seed)");
  return *seed;
}

}  // namespace duel::cli
