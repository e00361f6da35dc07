#pragma once

#include "duel/geometry.hpp"
#include "duel/scoring.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace duel {

enum class Policy { duel_naive, fifo, reservoir };
enum class MemoryVariant { stale_embedding, re_encode };
enum class Maintenance { incremental, full_recompute };

/// How near-ties in N are resolved when a replacement victim is chosen.
/// similarity_then_oldest prefers, among tied slots, the one with the
/// highest collision probability against the incoming sample and only then
/// the oldest; oldest skips the first criterion.
enum class TieBreak { similarity_then_oldest, oldest };

std::string to_string(Policy p);
std::string to_string(MemoryVariant v);
Policy parse_policy(std::string_view name);
MemoryVariant parse_variant(std::string_view name);

/// Extension point for learned replacement policies. The naive policy has
/// nothing to learn, so this returns its argument.
inline Policy update_policy(Policy p) { return p; }

/// An embedding plus its hidden ground-truth class. Replacement policies
/// never see `label`; it only feeds evaluation metrics and audit logs.
struct Sample {
  UnitVector embedding;
  int label = -1;
  std::optional<Eigen::VectorXd> raw;  // required by MemoryVariant::re_encode
};

struct EvictionRecord {
  std::size_t evicted_index = 0;  // == capacity when the incoming sample was rejected
  Sample evicted_sample;
  double n_value_at_eviction = 0.0;
  std::uint64_t step = 0;
};

struct CompositionMetrics {
  std::map<int, std::size_t> histogram;
  double max_fraction = 0.0;
  double entropy = 0.0;  // nats
};

struct MemoryOptions {
  std::size_t capacity = 256;
  Policy policy = Policy::duel_naive;
  MemoryVariant variant = MemoryVariant::stale_embedding;
  Maintenance maintenance = Maintenance::incremental;
  // Let the incoming sample compete in the argmax (evict-after-insert order).
  bool include_incoming = false;
  TieBreak tie_break = TieBreak::similarity_then_oldest;
  std::size_t resync_interval = 1024;
  std::uint64_t seed = 0;  // reservoir draws
};

/// Maps raw features to an unnormalized embedding; the memory normalizes.
using EncodeFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Fixed-capacity negative pool with cached duplicate counts
/// N(j) = sum_{i != j} h(z_i . z_j).
///
/// Counts are maintained incrementally in O(k d) per replacement and fully
/// recomputed every `resync_interval` replacements. Policy decisions read
/// only embeddings, counts and insertion timestamps. Single writer.
class DuelMemory {
 public:
  DuelMemory(MemoryOptions options, ScoreFunction h);

  /// Appends while below capacity (returns nullopt). At capacity the policy
  /// picks a victim slot and the incoming sample takes its place. Reservoir
  /// may discard the incoming sample, which also returns nullopt.
  std::optional<EvictionRecord> insert_replace(Sample incoming);

  /// Slot with the largest cached N; near-ties (within 1e-9 relative) go to
  /// the oldest slot.
  std::size_t argmax_duplicates() const;

  /// Re-encodes every slot from its raw features and recomputes all counts.
  /// Throws VariantMismatch on the stale-embedding variant.
  void refresh_embeddings(const EncodeFn& encoder);

  /// m slot indices drawn uniformly without replacement. m == size() returns
  /// every slot in slot order.
  std::vector<std::size_t> negative_indices(std::size_t m, std::uint64_t seed) const;
  std::vector<UnitVector> negatives(std::size_t m, std::uint64_t seed) const;

  /// Evaluation path: reads hidden labels.
  CompositionMetrics composition_metrics() const;

  /// Recomputes every cached count from scratch.
  void resynchronize();

  std::size_t size() const noexcept { return embeddings_.size(); }
  std::size_t capacity() const noexcept { return options_.capacity; }
  const MemoryOptions& options() const noexcept { return options_; }
  const ScoreFunction& score() const noexcept { return h_; }

  std::span<const double> cached_counts() const noexcept { return counts_; }
  std::span<const UnitVector> embeddings() const noexcept { return embeddings_; }
  /// d x size() matrix, one column per slot.
  auto embedding_matrix() const { return matrix_.leftCols(static_cast<Eigen::Index>(size())); }
  std::span<const int> hidden_labels() const noexcept { return labels_; }
  std::span<const std::uint64_t> timestamps() const noexcept { return stamps_; }
  std::uint64_t steps() const noexcept { return step_; }

 private:
  std::size_t oldest_slot() const;
  std::size_t pick_max(std::span<const double> values, const Eigen::VectorXd* incoming_sims) const;
  EvictionRecord replace(std::size_t victim, Sample incoming, const Eigen::VectorXd& sims,
                         double n_value);
  Eigen::VectorXd similarities(const Eigen::VectorXd& z) const;

  MemoryOptions options_;
  ScoreFunction h_;
  std::vector<UnitVector> embeddings_;
  Eigen::MatrixXd matrix_;
  std::vector<double> counts_;
  std::vector<int> labels_;
  std::vector<std::optional<Eigen::VectorXd>> raws_;
  std::vector<std::uint64_t> stamps_;
  std::uint64_t step_ = 0;
  std::uint64_t seen_ = 0;
  std::uint64_t replacements_ = 0;
  std::mt19937_64 rng_;
};

/// Streams eviction records as CSV:
/// step,evicted_index,n_value,evicted_class,policy
class EvictionCsvWriter {
 public:
  EvictionCsvWriter(std::ostream& out, Policy policy);
  void write(const EvictionRecord& record);

 private:
  std::ostream& out_;
  std::string policy_;
};

}  // namespace duel
