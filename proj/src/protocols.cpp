#include "stylip/protocols.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <thread>
#include <tuple>
#include <utility>

#include "json.hpp"
#include "stylip/container.hpp"
#include "stylip/errors.hpp"
#include "stylip/key_value.hpp"
#include "stylip/random.hpp"

namespace stylip {

double top1_accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> targets) {
  if (predictions.size() != targets.size()) {
    throw ContractError("top1_accuracy: " + std::to_string(predictions.size()) + " predictions for " +
                        std::to_string(targets.size()) + " targets");
  }
  if (targets.empty()) throw ContractError("top1_accuracy: no samples");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) hits += predictions[i] == targets[i];
  return static_cast<double>(hits) / static_cast<double>(targets.size());
}

double harmonic_mean(double base_acc, double new_acc) {
  if (!(base_acc > 0.0) || !(new_acc > 0.0)) {
    throw DomainError("harmonic_mean needs positive inputs, got " + format_double(base_acc) + " and " +
                      format_double(new_acc));
  }
  return 2.0 * base_acc * new_acc / (base_acc + new_acc);
}

// ---------------------------------------------------------------------------
// MetricReport

namespace {

double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double plain_mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Keys kept in first-appearance order so aggregates follow the row order.
template <typename Key>
struct OrderedGroups {
  std::vector<Key> keys;
  std::vector<std::vector<std::size_t>> members;

  void add(const Key& k, std::size_t row) {
    auto it = std::find(keys.begin(), keys.end(), k);
    if (it == keys.end()) {
      keys.push_back(k);
      members.push_back({row});
    } else {
      members[static_cast<std::size_t>(it - keys.begin())].push_back(row);
    }
  }
};

}  // namespace

void MetricReport::aggregate() {
  aggregates.clear();
  using FoldKey = std::tuple<std::string, std::string, std::string>;
  OrderedGroups<FoldKey> by_fold;
  using LooKey = std::pair<std::string, std::string>;
  OrderedGroups<LooKey> by_metric;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    by_fold.add({rows[i].variant, rows[i].fold, rows[i].metric}, i);
    by_metric.add({rows[i].variant, rows[i].metric}, i);
  }

  for (std::size_t g = 0; g < by_fold.keys.size(); ++g) {
    std::vector<double> xs;
    for (auto i : by_fold.members[g]) xs.push_back(rows[i].value);
    const double m = plain_mean(xs);
    const auto& [variant, fold, metric] = by_fold.keys[g];
    aggregates.push_back({"seed", variant, fold, metric, m, sample_std(xs, m), xs.size()});
  }

  for (std::size_t g = 0; g < by_metric.keys.size(); ++g) {
    std::vector<double> xs;
    OrderedGroups<std::uint64_t> by_seed;
    for (auto i : by_metric.members[g]) {
      xs.push_back(rows[i].value);
      by_seed.add(rows[i].seed, i);
    }
    std::vector<double> seed_means;
    for (const auto& members : by_seed.members) {
      std::vector<double> ys;
      for (auto i : members) ys.push_back(rows[i].value);
      seed_means.push_back(plain_mean(ys));
    }
    const auto& [variant, metric] = by_metric.keys[g];
    aggregates.push_back({"leave-one-out", variant, "*", metric, plain_mean(xs),
                          sample_std(seed_means, plain_mean(seed_means)), xs.size()});
  }

  std::vector<std::string> variants;
  for (const auto& [variant, metric] : by_metric.keys) {
    if (std::find(variants.begin(), variants.end(), variant) == variants.end()) variants.push_back(variant);
  }
  for (const auto& v : variants) {
    const Aggregate* base = find("leave-one-out", v, "*", "base");
    const Aggregate* fresh = find("leave-one-out", v, "*", "new");
    if (!base || !fresh) continue;
    const double hm = base->mean > 0.0 && fresh->mean > 0.0 ? harmonic_mean(base->mean, fresh->mean) : 0.0;
    aggregates.push_back({"hm-of-means", v, "*", "hm", hm, 0.0, base->count});
  }
}

const Aggregate* MetricReport::find(std::string_view kind, std::string_view variant, std::string_view fold,
                                    std::string_view metric) const {
  for (const auto& a : aggregates) {
    if (a.kind == kind && a.variant == variant && a.fold == fold && a.metric == metric) return &a;
  }
  return nullptr;
}

std::string MetricReport::to_csv() const {
  std::string out = "# columns: ";
  out += kCsvColumns;
  out += '\n';
  out += kCsvColumns;
  out += '\n';
  for (const auto& r : rows) {
    out += r.protocol + ',' + r.fold + ',' + r.variant + ',' + std::to_string(r.seed) + ',' + r.metric + ',' +
           format_double(r.value) + '\n';
  }
  return out;
}

std::string MetricReport::to_json(const std::map<std::string, std::string>& config_echo) const {
  nlohmann::ordered_json j;
  j["protocol"] = protocol;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"fold", r.fold},
                         {"variant", r.variant},
                         {"seed", r.seed},
                         {"metric", r.metric},
                         {"value", r.value}});
  }
  j["aggregates"] = nlohmann::ordered_json::array();
  for (const auto& a : aggregates) {
    j["aggregates"].push_back({{"kind", a.kind},
                               {"variant", a.variant},
                               {"fold", a.fold},
                               {"metric", a.metric},
                               {"mean", a.mean},
                               {"std", a.std},
                               {"count", a.count}});
  }
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config_echo) cfg[k] = v;
  j["config"] = std::move(cfg);
  return j.dump(2) + '\n';
}

// ---------------------------------------------------------------------------
// Baselines and configuration

std::vector<ModelSpec> baseline_models(const VariantConfig& reference) {
  VariantConfig random_prompt = reference;
  random_prompt.style_source = StyleSource::kFreeLearnedVectors;
  return {{"zero-prompt", reference, false}, {"frozen-random-prompt", random_prompt, false}};
}

void ProtocolConfig::validate() const {
  loss.validate();
  if (shots == 0) throw ConfigError("shots must be at least 1");
  if (test_per_class == 0) throw ConfigError("test_per_class must be at least 1");
  if (workers == 0) throw ConfigError("workers must be at least 1");
}

std::uint64_t test_set_seed(std::uint64_t data_seed, std::size_t domain_id) {
  return derive_seed({data_seed, 0x7e57, domain_id});
}

std::vector<std::string> fold_names(Protocol, std::span<const DomainSpec> domains) {
  std::vector<std::string> names;
  for (const auto& d : domains) names.push_back(d.name);
  return names;
}

// ---------------------------------------------------------------------------
// Runner

namespace {

struct Evaluation {
  std::string metric;
  std::size_t domain = 0;  // position in the domain list
  bool base_classes = false;  // train classes instead of test classes
};

struct TestKey {
  std::size_t domain = 0;
  std::vector<std::size_t> classes;
  friend bool operator==(const TestKey&, const TestKey&) = default;
};

struct Job {
  std::size_t fold = 0;
  std::size_t model = 0;
  std::uint64_t seed = 0;
};

struct JobResult {
  std::vector<MetricRow> rows;
  FoldArtifact artifact;
};

std::vector<Evaluation> evaluations(Protocol protocol, const ExperimentSplit& split,
                                    std::span<const DomainSpec> domains) {
  std::vector<Evaluation> evals;
  switch (protocol) {
    case Protocol::kMultiDg:
      evals.push_back({"acc", split.targets.front(), false});
      break;
    case Protocol::kSingleDg:
      for (auto t : split.targets) evals.push_back({"acc@" + domains[t].name, t, false});
      break;
    case Protocol::kBaseToNewInDomain:
      evals.push_back({"base", split.sources.front(), true});
      evals.push_back({"new", split.sources.front(), false});
      break;
    case Protocol::kBaseToNewCrossDomain:
      evals.push_back({"base", split.sources.front(), true});
      evals.push_back({"new", split.sources.front(), false});
      for (std::size_t d = 0; d < domains.size(); ++d) evals.push_back({"new@" + domains[d].name, d, false});
      break;
  }
  return evals;
}

// Appends the rows derived from the measured ones: the target average for
// single-source DG and the per-fold HM for base-to-new.
void add_derived(Protocol protocol, std::vector<MetricRow>& rows) {
  if (rows.empty()) return;
  MetricRow proto = rows.front();
  if (protocol == Protocol::kSingleDg) {
    double s = 0.0;
    for (const auto& r : rows) s += r.value;
    proto.metric = "acc";
    proto.value = s / static_cast<double>(rows.size());
    rows.insert(rows.begin(), proto);
  } else if (is_base_to_new(protocol)) {
    const double base = rows[0].value, fresh = rows[1].value;
    proto.metric = "hm";
    // A zero accuracy has HM limit 0; harmonic_mean itself rejects it.
    proto.value = base > 0.0 && fresh > 0.0 ? harmonic_mean(base, fresh) : 0.0;
    rows.insert(rows.begin() + 2, proto);
  }
}

ExperimentSplit split_for(Protocol protocol, std::size_t num_domains, std::size_t num_classes, std::size_t fold,
                          std::uint64_t seed, const ProtocolConfig& cfg) {
  return make_split(protocol, num_domains, num_classes, fold, cfg.shots, seed, cfg.shuffle_classes);
}

// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index is
// handled exactly once; the first failure (lowest index) is rethrown.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  auto body = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t threads = std::min(workers, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) body(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ProtocolResult run_impl(Protocol protocol, const FrozenEncoders& encoders, std::span<const DomainSpec> domains,
                        std::size_t num_classes, std::span<const ModelSpec> models,
                        std::span<const std::uint64_t> seeds, const ProtocolConfig& cfg) {
  cfg.validate();
  if (domains.size() < 2 && protocol != Protocol::kBaseToNewInDomain) {
    throw ConfigError(std::string(to_string(protocol)) + " needs at least 2 domains");
  }
  if (domains.empty()) throw ConfigError("no domains selected");
  if (models.empty()) throw ConfigError("no models to evaluate");
  if (seeds.empty()) throw ConfigError("no seeds given");
  if (num_classes == 0 || num_classes > encoders.config.num_classes) {
    throw ConfigError("class count " + std::to_string(num_classes) + " outside [1, " +
                      std::to_string(encoders.config.num_classes) + "]");
  }
  for (const auto& m : models) m.variant.validate();

  const std::size_t folds = domains.size();
  std::vector<Job> jobs;
  for (std::size_t f = 0; f < folds; ++f)
    for (std::size_t m = 0; m < models.size(); ++m)
      for (auto s : seeds) jobs.push_back({f, m, s});

  // Every distinct test set is rendered and encoded once, up front.
  std::vector<TestKey> keys;
  for (const auto& job : jobs) {
    const auto split = split_for(protocol, folds, num_classes, job.fold, job.seed, cfg);
    for (const auto& e : evaluations(protocol, split, domains)) {
      TestKey k{e.domain, e.base_classes ? split.train_classes : split.test_classes};
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(std::move(k));
    }
  }
  std::vector<std::vector<EncodedSample>> tests(keys.size());
  parallel_for(keys.size(), cfg.workers, [&](std::size_t i) {
    const auto& d = domains[keys[i].domain];
    const auto data = generate_dataset(d, keys[i].classes, cfg.test_per_class,
                                       test_set_seed(cfg.data_seed, d.id));
    tests[i] = encode_samples(encoders.vision, data.samples);
  });
  auto test_set = [&](std::size_t domain, const std::vector<std::size_t>& classes) -> const auto& {
    const TestKey k{domain, classes};
    return tests[static_cast<std::size_t>(std::find(keys.begin(), keys.end(), k) - keys.begin())];
  };

  const Predictor predictor = cfg.predictor ? cfg.predictor
                                            : Predictor([](const StylipModel& m, const EncodedSample& s,
                                                           std::span<const std::size_t> labels, double tau) {
                                                return predict(m, s.features, labels, tau);
                                              });

  std::vector<JobResult> results(jobs.size());
  parallel_for(jobs.size(), cfg.workers, [&](std::size_t j) {
    const Job& job = jobs[j];
    const ModelSpec& spec = models[job.model];
    const auto split = split_for(protocol, folds, num_classes, job.fold, job.seed, cfg);
    LossConfig loss = cfg.loss;
    loss.seed = job.seed;

    TrainedModel tm = spec.train ? train(encoders, split, domains, spec.variant, loss, cfg.data_seed)
                                 : initial_model(encoders, spec.variant, loss);

    JobResult& out = results[j];
    const std::string fold = domains[job.fold].name;
    for (const auto& e : evaluations(protocol, split, domains)) {
      const auto& labels = e.base_classes ? split.train_classes : split.test_classes;
      const auto& test = test_set(e.domain, labels);
      std::vector<std::size_t> predictions, targets;
      for (const auto& s : test) {
        predictions.push_back(predictor(tm.model, s, labels, loss.tau));
        targets.push_back(s.label);
      }
      out.rows.push_back({std::string(to_string(protocol)), fold, spec.name, job.seed, e.metric,
                          top1_accuracy(predictions, targets)});
    }
    add_derived(protocol, out.rows);
    if (cfg.keep_artifacts) {
      out.artifact = {fold, spec.name, job.seed, encode_container(tm.model.pipeline().to_checkpoint()),
                      tm.log_csv()};
    }
  });

  ProtocolResult result;
  result.report.protocol = std::string(to_string(protocol));
  for (auto& r : results) {
    for (auto& row : r.rows) result.report.rows.push_back(std::move(row));
    if (cfg.keep_artifacts) result.artifacts.push_back(std::move(r.artifact));
  }
  result.report.aggregate();
  return result;
}

}  // namespace

ProtocolResult run_multi_source_dg(const FrozenEncoders& encoders, std::span<const DomainSpec> domains,
                                   std::size_t num_classes, std::span<const ModelSpec> models,
                                   std::span<const std::uint64_t> seeds, const ProtocolConfig& cfg) {
  return run_impl(Protocol::kMultiDg, encoders, domains, num_classes, models, seeds, cfg);
}

ProtocolResult run_single_source_dg(const FrozenEncoders& encoders, std::span<const DomainSpec> domains,
                                    std::size_t num_classes, std::span<const ModelSpec> models,
                                    std::span<const std::uint64_t> seeds, const ProtocolConfig& cfg) {
  return run_impl(Protocol::kSingleDg, encoders, domains, num_classes, models, seeds, cfg);
}

ProtocolResult run_base_to_new(BaseToNewMode mode, const FrozenEncoders& encoders,
                               std::span<const DomainSpec> domains, std::size_t num_classes,
                               std::span<const ModelSpec> models, std::span<const std::uint64_t> seeds,
                               const ProtocolConfig& cfg) {
  if (num_classes % 2 != 0) {
    throw ConfigError("base-to-new needs an even class count, got " + std::to_string(num_classes));
  }
  const Protocol p =
      mode == BaseToNewMode::kInDomain ? Protocol::kBaseToNewInDomain : Protocol::kBaseToNewCrossDomain;
  return run_impl(p, encoders, domains, num_classes, models, seeds, cfg);
}

ProtocolResult run_protocol(Protocol protocol, const FrozenEncoders& encoders, std::span<const DomainSpec> domains,
                            std::size_t num_classes, std::span<const ModelSpec> models,
                            std::span<const std::uint64_t> seeds, const ProtocolConfig& cfg) {
  switch (protocol) {
    case Protocol::kMultiDg: return run_multi_source_dg(encoders, domains, num_classes, models, seeds, cfg);
    case Protocol::kSingleDg: return run_single_source_dg(encoders, domains, num_classes, models, seeds, cfg);
    case Protocol::kBaseToNewInDomain:
      return run_base_to_new(BaseToNewMode::kInDomain, encoders, domains, num_classes, models, seeds, cfg);
    case Protocol::kBaseToNewCrossDomain:
      return run_base_to_new(BaseToNewMode::kCrossDomain, encoders, domains, num_classes, models, seeds, cfg);
  }
  throw ConfigError("unknown protocol");
}

}  // namespace stylip
