#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stylip/encoders.hpp"
#include "stylip/prompt_pipeline.hpp"
#include "stylip/synthetic_data.hpp"
#include "stylip/training.hpp"

namespace stylip {

/// Fraction of positions where prediction and target agree.
double top1_accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> targets);

/// 2ab / (a + b); both inputs must be positive.
double harmonic_mean(double base_acc, double new_acc);

/// One evaluated quantity of one (fold, model, seed) job.
///
/// `metric` is "acc" for closed-set protocols, "base" / "new" / "hm" for
/// base-to-new, and "<metric>@<domain>" for per-target breakdowns.
struct MetricRow {
  std::string protocol;
  std::string fold;
  std::string variant;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
};

/// kind "seed": mean/std over seeds of one (variant, fold, metric).
/// kind "leave-one-out": mean over every fold row of one (variant, metric);
/// std is taken over the per-seed fold means. kind "hm-of-means": harmonic
/// mean of the leave-one-out base and new means.
struct Aggregate {
  std::string kind;
  std::string variant;
  std::string fold;  // "*" for aggregates across folds
  std::string metric;
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};

struct MetricReport {
  std::string protocol;
  std::vector<MetricRow> rows;
  std::vector<Aggregate> aggregates;

  /// Recomputes `aggregates` from `rows`.
  void aggregate();

  const Aggregate* find(std::string_view kind, std::string_view variant, std::string_view fold,
                        std::string_view metric) const;

  static constexpr std::string_view kCsvColumns = "protocol,fold,variant,seed,metric,value";

  /// One row per line after a '#' comment naming the columns and a header row.
  std::string to_csv() const;

  /// Rows, aggregates and the supplied config echo.
  std::string to_json(const std::map<std::string, std::string>& config_echo = {}) const;
};

/// A named model to evaluate; `train == false` keeps the projectors at init.
struct ModelSpec {
  std::string name;
  VariantConfig variant;
  bool train = true;
};

/// zero-prompt: `reference` untrained. frozen-random-prompt: `reference`
/// with free-learned context vectors, untrained.
std::vector<ModelSpec> baseline_models(const VariantConfig& reference);

/// Projectors and training log of one job, for checkpointing.
struct FoldArtifact {
  std::string fold;
  std::string variant;
  std::uint64_t seed = 0;
  std::string projectors;  // serialized container
  std::string log_csv;
};

using Predictor = std::function<std::size_t(const StylipModel&, const EncodedSample&,
                                            std::span<const std::size_t> labels, double tau)>;

struct ProtocolConfig {
  LossConfig loss;             // loss.seed is replaced by each run seed
  std::size_t shots = 16;
  std::size_t test_per_class = 32;
  std::uint64_t data_seed = 0;
  std::size_t workers = 1;
  bool shuffle_classes = false;  // base/new halves from a seeded permutation
  bool keep_artifacts = false;
  Predictor predictor;         // defaults to predict()

  void validate() const;
};

struct ProtocolResult {
  MetricReport report;
  std::vector<FoldArtifact> artifacts;  // job order; empty unless keep_artifacts
};

/// Leave-one-domain-out: each domain is held out once, the rest train jointly.
ProtocolResult run_multi_source_dg(const FrozenEncoders& encoders, std::span<const DomainSpec> domains,
                                   std::size_t num_classes, std::span<const ModelSpec> models,
                                   std::span<const std::uint64_t> seeds, const ProtocolConfig& cfg);

/// Leave-all-but-one-domain-out: train on one domain, average over the rest.
ProtocolResult run_single_source_dg(const FrozenEncoders& encoders, std::span<const DomainSpec> domains,
                                    std::size_t num_classes, std::span<const ModelSpec> models,
                                    std::span<const std::uint64_t> seeds, const ProtocolConfig& cfg);

enum class BaseToNewMode { kInDomain, kCrossDomain };

/// Train on the base half of the classes, test on base and new halves.
ProtocolResult run_base_to_new(BaseToNewMode mode, const FrozenEncoders& encoders,
                               std::span<const DomainSpec> domains, std::size_t num_classes,
                               std::span<const ModelSpec> models, std::span<const std::uint64_t> seeds,
                               const ProtocolConfig& cfg);

/// Dispatches on the protocol id.
ProtocolResult run_protocol(Protocol protocol, const FrozenEncoders& encoders, std::span<const DomainSpec> domains,
                            std::size_t num_classes, std::span<const ModelSpec> models,
                            std::span<const std::uint64_t> seeds, const ProtocolConfig& cfg);

/// Seed of the held-out test images of one domain; independent of run seeds.
std::uint64_t test_set_seed(std::uint64_t data_seed, std::size_t domain_id);

/// The fold names a protocol produces for `domains`, in report order.
std::vector<std::string> fold_names(Protocol protocol, std::span<const DomainSpec> domains);

}  // namespace stylip
