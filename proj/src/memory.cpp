#include "duel/memory.hpp"

#include "duel/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace duel {

std::string to_string(Policy p) {
  switch (p) {
    case Policy::duel_naive:
      return "duel-naive";
    case Policy::fifo:
      return "fifo";
    case Policy::reservoir:
      return "reservoir";
  }
  return "?";
}

std::string to_string(MemoryVariant v) {
  return v == MemoryVariant::stale_embedding ? "stale" : "re-encode";
}

Policy parse_policy(std::string_view name) {
  if (name == "duel-naive") return Policy::duel_naive;
  if (name == "fifo") return Policy::fifo;
  if (name == "reservoir") return Policy::reservoir;
  throw InvalidArgument(fmt::format("unknown policy '{}'", name));
}

MemoryVariant parse_variant(std::string_view name) {
  if (name == "stale") return MemoryVariant::stale_embedding;
  if (name == "re-encode") return MemoryVariant::re_encode;
  throw InvalidArgument(fmt::format("unknown memory variant '{}'", name));
}

DuelMemory::DuelMemory(MemoryOptions options, ScoreFunction h)
    : options_(options), h_(h), rng_(options.seed) {
  if (options_.capacity < 2) {
    throw InvalidArgument(fmt::format("memory capacity must be >= 2, got {}", options_.capacity));
  }
  if (options_.resync_interval == 0) {
    throw InvalidArgument("memory resync_interval must be positive");
  }
  embeddings_.reserve(options_.capacity);
  counts_.reserve(options_.capacity);
  labels_.reserve(options_.capacity);
  raws_.reserve(options_.capacity);
  stamps_.reserve(options_.capacity);
}

Eigen::VectorXd DuelMemory::similarities(const Eigen::VectorXd& z) const {
  return embedding_matrix().transpose() * z;
}

std::optional<EvictionRecord> DuelMemory::insert_replace(Sample incoming) {
  const Eigen::VectorXd& z = incoming.embedding.coords();
  if (!embeddings_.empty() && z.size() != matrix_.rows()) {
    throw ShapeMismatch(fmt::format("insert: embedding dimension {} vs memory {}", z.size(),
                                    matrix_.rows()));
  }
  if (options_.variant == MemoryVariant::re_encode && !incoming.raw) {
    throw VariantMismatch("insert: re-encode memory needs raw features on every sample");
  }
  if (matrix_.size() == 0) {
    matrix_.resize(z.size(), static_cast<Eigen::Index>(options_.capacity));
  }
  ++step_;
  ++seen_;

  const Eigen::VectorXd sims = similarities(z);
  if (size() < capacity()) {
    double own = 0.0;
    for (Eigen::Index j = 0; j < sims.size(); ++j) {
      const double p = h_(sims[j]);
      counts_[j] += p;
      own += p;
    }
    matrix_.col(static_cast<Eigen::Index>(size())) = z;
    embeddings_.push_back(std::move(incoming.embedding));
    counts_.push_back(own);
    labels_.push_back(incoming.label);
    raws_.push_back(std::move(incoming.raw));
    stamps_.push_back(step_);
    return std::nullopt;
  }

  switch (options_.policy) {
    case Policy::fifo: {
      const std::size_t victim = oldest_slot();
      return replace(victim, std::move(incoming), sims, counts_[victim]);
    }
    case Policy::reservoir: {
      std::uniform_int_distribution<std::uint64_t> draw(0, seen_ - 1);
      const std::uint64_t r = draw(rng_);
      if (r >= capacity()) return std::nullopt;
      return replace(r, std::move(incoming), sims, counts_[r]);
    }
    case Policy::duel_naive:
      break;
  }

  if (!options_.include_incoming) {
    const std::size_t victim = pick_max(counts_, &sims);
    return replace(victim, std::move(incoming), sims, counts_[victim]);
  }

  // Pool of k + 1: every existing count gains h(z_j . z_new).
  std::vector<double> pooled(counts_.size());
  double own = 0.0;
  for (std::size_t j = 0; j < counts_.size(); ++j) {
    const double p = h_(sims[static_cast<Eigen::Index>(j)]);
    pooled[j] = counts_[j] + p;
    own += p;
  }
  const std::size_t victim = pick_max(pooled, &sims);
  const double best = pooled[victim];
  // The incoming sample is the newest, so it loses every tie.
  if (own > best + 1e-9 * std::max(1.0, std::abs(best))) {
    EvictionRecord rejected{capacity(), std::move(incoming), own, step_};
    return rejected;
  }
  return replace(victim, std::move(incoming), sims, best);
}

EvictionRecord DuelMemory::replace(std::size_t victim, Sample incoming,
                                   const Eigen::VectorXd& sims, double n_value) {
  const auto v = static_cast<Eigen::Index>(victim);
  const Eigen::VectorXd old_sims = similarities(matrix_.col(v));
  double own = 0.0;
  for (Eigen::Index j = 0; j < sims.size(); ++j) {
    if (j == v) continue;
    const double p = h_(sims[j]);
    counts_[j] += p - h_(old_sims[j]);
    own += p;
  }

  EvictionRecord record{victim,
                        Sample{std::move(embeddings_[victim]), labels_[victim],
                               std::move(raws_[victim])},
                        n_value, step_};

  matrix_.col(v) = incoming.embedding.coords();
  embeddings_[victim] = std::move(incoming.embedding);
  labels_[victim] = incoming.label;
  raws_[victim] = std::move(incoming.raw);
  stamps_[victim] = step_;
  counts_[victim] = own;

  ++replacements_;
  if (options_.maintenance == Maintenance::full_recompute ||
      replacements_ % options_.resync_interval == 0) {
    resynchronize();
  }
  return record;
}

std::size_t DuelMemory::oldest_slot() const {
  return static_cast<std::size_t>(std::min_element(stamps_.begin(), stamps_.end()) -
                                  stamps_.begin());
}

std::size_t DuelMemory::pick_max(std::span<const double> values,
                                 const Eigen::VectorXd* incoming_sims) const {
  auto tolerance = [](double v) { return 1e-9 * std::max(1.0, std::abs(v)); };
  const double best = *std::max_element(values.begin(), values.end());
  const double floor = best - tolerance(best);

  std::vector<std::size_t> tied;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (values[j] >= floor) tied.push_back(j);
  }
  if (incoming_sims != nullptr && tied.size() > 1 &&
      options_.tie_break == TieBreak::similarity_then_oldest) {
    std::vector<double> p(tied.size());
    for (std::size_t t = 0; t < tied.size(); ++t) {
      p[t] = h_((*incoming_sims)[static_cast<Eigen::Index>(tied[t])]);
    }
    const double closest = *std::max_element(p.begin(), p.end());
    std::vector<std::size_t> kept;
    for (std::size_t t = 0; t < tied.size(); ++t) {
      if (p[t] >= closest - tolerance(closest)) kept.push_back(tied[t]);
    }
    tied = std::move(kept);
  }
  return *std::min_element(tied.begin(), tied.end(),
                           [this](std::size_t a, std::size_t b) { return stamps_[a] < stamps_[b]; });
}

std::size_t DuelMemory::argmax_duplicates() const {
  if (embeddings_.empty()) throw EmptyInput("argmax_duplicates: memory is empty");
  return pick_max(counts_, nullptr);
}

void DuelMemory::resynchronize() {
  const auto n = static_cast<Eigen::Index>(size());
  if (n == 0) return;
  const Eigen::MatrixXd gram = embedding_matrix().transpose() * embedding_matrix();
  for (Eigen::Index j = 0; j < n; ++j) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i != j) total += h_(gram(i, j));
    }
    counts_[static_cast<std::size_t>(j)] = total;
  }
}

void DuelMemory::refresh_embeddings(const EncodeFn& encoder) {
  if (options_.variant != MemoryVariant::re_encode) {
    throw VariantMismatch("refresh_embeddings: memory stores stale embeddings");
  }
  for (std::size_t j = 0; j < size(); ++j) {
    if (!raws_[j]) throw VariantMismatch("refresh_embeddings: slot without raw features");
    UnitVector z = normalize(encoder(*raws_[j]));
    if (z.dim() != matrix_.rows()) {
      throw ShapeMismatch("refresh_embeddings: encoder changed the embedding dimension");
    }
    matrix_.col(static_cast<Eigen::Index>(j)) = z.coords();
    embeddings_[j] = std::move(z);
  }
  resynchronize();
}

std::vector<std::size_t> DuelMemory::negative_indices(std::size_t m, std::uint64_t seed) const {
  if (m > size()) {
    throw OutOfRange(fmt::format("negatives: requested {} from a memory of {}", m, size()));
  }
  std::vector<std::size_t> idx(size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (m == size()) return idx;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(m);
  return idx;
}

std::vector<UnitVector> DuelMemory::negatives(std::size_t m, std::uint64_t seed) const {
  std::vector<UnitVector> out;
  out.reserve(m);
  for (std::size_t i : negative_indices(m, seed)) out.push_back(embeddings_[i]);
  return out;
}

CompositionMetrics DuelMemory::composition_metrics() const {
  CompositionMetrics m;
  if (labels_.empty()) return m;
  for (int c : labels_) ++m.histogram[c];
  const double n = static_cast<double>(labels_.size());
  std::size_t top = 0;
  for (const auto& [c, count] : m.histogram) {
    top = std::max(top, count);
    const double p = static_cast<double>(count) / n;
    m.entropy -= p * std::log(p);
  }
  m.max_fraction = static_cast<double>(top) / n;
  return m;
}

EvictionCsvWriter::EvictionCsvWriter(std::ostream& out, Policy policy)
    : out_(out), policy_(to_string(policy)) {
  out_ << "step,evicted_index,n_value,evicted_class,policy\n";
}

void EvictionCsvWriter::write(const EvictionRecord& r) {
  out_ << fmt::format("{},{},{:.17g},{},{}\n", r.step, r.evicted_index, r.n_value_at_eviction,
                      r.evicted_sample.label, policy_);
}

}  // namespace duel
