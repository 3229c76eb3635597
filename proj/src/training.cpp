#include "stylip/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include "stylip/errors.hpp"
#include "stylip/key_value.hpp"
#include "stylip/ops.hpp"
#include "stylip/optim.hpp"
#include "stylip/random.hpp"

namespace stylip {
namespace {

void require_labels(std::span<const std::size_t> labels) {
  if (labels.empty()) throw ContractError("class set is empty");
}

std::size_t position_of(std::span<const std::size_t> labels, std::size_t y) {
  auto it = std::find(labels.begin(), labels.end(), y);
  if (it == labels.end()) {
    throw ContractError("target label " + std::to_string(y) + " is not in the class set");
  }
  return static_cast<std::size_t>(it - labels.begin());
}

}  // namespace

void LossConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("temperature tau must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
}

std::vector<EncodedSample> encode_samples(const VisionEncoder& vision, std::span<const Sample> samples) {
  std::vector<EncodedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({vision.forward(s.image), s.label, s.domain});
  return out;
}

// ---------------------------------------------------------------------------

StylipModel::StylipModel(const FrozenEncoders& encoders, PromptPipeline pipeline)
    : encoders_(&encoders), pipeline_(std::move(pipeline)) {
  if (!(pipeline_.encoder_config() == encoders.config)) {
    throw ConfigError("projectors were built for a different encoder configuration");
  }
}

Var StylipModel::logits(const Binding& b, const ImageFeatures& x, std::span<const std::size_t> labels,
                        double tau) const {
  require_labels(labels);
  Tape& tape = b.tape();
  std::vector<Var> maps;
  maps.reserve(x.stages.size());
  for (const auto& s : x.stages) maps.push_back(tape.constant_ref(s));
  Var image = tape.constant_ref(x.embedding);

  const auto context = pipeline_.context_tokens(b, maps);
  std::optional<Var> content;
  if (!pipeline_.content_stages().empty()) content = pipeline_.content_vector(b, maps);

  // All class prompts share the context tokens; they run through f_t as one stack.
  const std::size_t t = encoders_->config.token_dim;
  std::vector<Var> rows;
  rows.reserve(labels.size() * (context.size() + 1));
  for (auto y : labels) {
    const Prompt prompt = assemble_prompt(context, encoders_->classes, y);
    for (const Var& tok : prompt.tokens()) rows.push_back(ops::reshape(tok, {1, t}));
  }
  Var text = encoders_->text.forward_sequences(ops::concat(rows, 0));

  std::vector<Var> scores;
  scores.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Var weight = pipeline_.fuse(b, content, ops::row(text, i));
    scores.push_back(ops::reshape(ops::cosine_similarity(weight, image), {1}));
  }
  return ops::scale(ops::concat(scores, 0), 1.0 / tau);
}

std::vector<double> StylipModel::similarities(const ImageFeatures& x, std::span<const std::size_t> labels) const {
  Tape tape;
  Binding b = pipeline_.bind(tape, false);
  const auto& v = logits(b, x, labels, 1.0).value();
  return {v.data().begin(), v.data().end()};
}

Tensor class_probabilities(const StylipModel& model, const ImageFeatures& x, std::span<const std::size_t> labels,
                           double tau) {
  if (!(tau > 0.0)) throw DomainError("temperature must be positive");
  Tape tape;
  Binding b = model.pipeline().bind(tape, false);
  return ops::softmax(model.logits(b, x, labels, tau)).value();
}

Var contrastive_loss(const StylipModel& model, const Binding& b, std::span<const EncodedSample* const> batch,
                     std::span<const std::size_t> labels, double tau) {
  if (batch.empty()) throw ContractError("contrastive_loss: empty batch");
  require_labels(labels);
  std::vector<Var> terms;
  terms.reserve(batch.size());
  for (const EncodedSample* s : batch) {
    const std::size_t target = position_of(labels, s->label);
    Var logp = ops::log_softmax(model.logits(b, s->features, labels, tau));
    terms.push_back(ops::reshape(ops::pick(logp, target), {1}));
  }
  return ops::scale(ops::sum(ops::concat(terms, 0)), -1.0 / static_cast<double>(batch.size()));
}

double contrastive_loss(const StylipModel& model, std::span<const EncodedSample> batch,
                        std::span<const std::size_t> labels, double tau) {
  std::vector<const EncodedSample*> ptrs;
  for (const auto& s : batch) ptrs.push_back(&s);
  Tape tape;
  Binding b = model.pipeline().bind(tape, false);
  return contrastive_loss(model, b, ptrs, labels, tau).value().item();
}

std::size_t predict(const StylipModel& model, const ImageFeatures& x, std::span<const std::size_t> labels,
                    double tau) {
  require_labels(labels);
  if (!(tau > 0.0)) throw DomainError("temperature must be positive");
  // Softmax is monotone, so the argmax is taken on the scaled logits directly.
  Tape tape;
  Binding b = model.pipeline().bind(tape, false);
  const Tensor scores = model.logits(b, x, labels, tau).value();
  std::size_t best = 0;
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (scores[i] > scores[best] || (scores[i] == scores[best] && labels[i] < labels[best])) best = i;
  }
  return labels[best];
}

// ---------------------------------------------------------------------------

std::string TrainedModel::log_csv() const {
  std::ostringstream os;
  os << "epoch,mean_loss,train_acc\n";
  for (const auto& e : log) {
    os << e.epoch << ',' << format_double(e.mean_loss) << ',' << format_double(e.train_acc) << '\n';
  }
  return os.str();
}

double lr_scale_for(const Tensor& param) {
  return param.rank() == 2 ? 1.0 / std::sqrt(static_cast<double>(param.dim(0))) : 1.0;
}

TrainedModel initial_model(const FrozenEncoders& encoders, const VariantConfig& variant, const LossConfig& cfg) {
  return {StylipModel(encoders, PromptPipeline(encoders.config, variant, derive_seed({cfg.seed, 21}))), {}};
}

TrainedModel train(const FrozenEncoders& encoders, std::span<const EncodedSample> pool,
                   std::span<const std::size_t> labels, const VariantConfig& variant, const LossConfig& cfg) {
  cfg.validate();
  require_labels(labels);
  if (pool.empty()) throw ContractError("train: empty training set");
  for (const auto& s : pool) position_of(labels, s.label);

  TrainedModel out = initial_model(encoders, variant, cfg);
  ParameterSet& params = out.model.pipeline().parameters();

  const AdamConfig adam{cfg.lr, cfg.beta1, cfg.beta2, 1e-8};
  std::vector<AdamState> states;
  for (const auto& p : params.items()) states.emplace_back(p.value.shape(), adam, lr_scale_for(p.value));

  Rng order_rng(derive_seed({cfg.seed, 22}));
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<const EncodedSample*> batch;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(&pool[order[i]]);

      Tape tape;
      Binding b = out.model.pipeline().bind(tape, true);
      Var loss = contrastive_loss(out.model, b, batch, labels, cfg.tau);
      if (!std::isfinite(loss.value().item())) {
        throw Error("training diverged: non-finite loss in epoch " + std::to_string(epoch + 1));
      }
      tape.backward(loss);
      loss_sum += loss.value().item() * static_cast<double>(batch.size());
      const auto grads = b.gradients();
      for (std::size_t k = 0; k < grads.size(); ++k) adam_step(states[k], params.items()[k].value, grads[k]);
    }

    std::size_t correct = 0;
    for (const auto& s : pool) correct += predict(out.model, s.features, labels, cfg.tau) == s.label;
    out.log.push_back({epoch + 1, loss_sum / static_cast<double>(pool.size()),
                       static_cast<double>(correct) / static_cast<double>(pool.size())});
  }
  return out;
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

std::vector<GradientCheck> check_gradients(StylipModel& model, std::span<const EncodedSample> batch,
                                           std::span<const std::size_t> labels, double tau, double h,
                                           std::size_t max_coords, std::uint64_t seed) {
  std::vector<const EncodedSample*> ptrs;
  for (const auto& s : batch) ptrs.push_back(&s);
  Tape tape;
  Binding b = model.pipeline().bind(tape, true);
  tape.backward(contrastive_loss(model, b, ptrs, labels, tau));
  const auto grads = b.gradients();

  auto& items = model.pipeline().parameters().items();
  Rng rng(derive_seed({seed, 0x6763}));
  std::vector<GradientCheck> out;
  for (std::size_t k = 0; k < items.size(); ++k) {
    Tensor& p = items[k].value;
    std::vector<std::size_t> coords(p.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (max_coords != 0 && coords.size() > max_coords) {
      rng.shuffle(coords);
      coords.resize(max_coords);
      std::sort(coords.begin(), coords.end());
    }
    GradientCheck gc{items[k].name, coords.size(), 0.0};
    for (auto i : coords) {
      const double orig = p[i];
      p[i] = orig + h;
      const double up = contrastive_loss(model, batch, labels, tau);
      p[i] = orig - h;
      const double down = contrastive_loss(model, batch, labels, tau);
      p[i] = orig;
      gc.max_relative_error = std::max(gc.max_relative_error, relative_error(grads[k][i], (up - down) / (2.0 * h)));
    }
    out.push_back(std::move(gc));
  }
  return out;
}

std::vector<Sample> training_pool(const ExperimentSplit& split, std::span<const DomainSpec> domains,
                                  std::uint64_t data_seed, std::uint64_t run_seed) {
  std::vector<Sample> pool;
  for (auto d : split.sources) {
    if (d >= domains.size()) throw ConfigError("split references unknown domain " + std::to_string(d));
    auto ds = generate_dataset(domains[d], split.train_classes, split.shots,
                               derive_seed({data_seed, run_seed, domains[d].id, 0}));
    for (auto& s : ds.samples) pool.push_back(std::move(s));
  }
  return pool;
}

TrainedModel train(const FrozenEncoders& encoders, const ExperimentSplit& split, std::span<const DomainSpec> domains,
                   const VariantConfig& variant, const LossConfig& cfg, std::uint64_t data_seed) {
  split.validate();
  const auto pool = encode_samples(encoders.vision, training_pool(split, domains, data_seed, cfg.seed));
  return train(encoders, pool, split.train_classes, variant, cfg);
}

}  // namespace stylip
