#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stylip/encoders.hpp"
#include "stylip/prompt_pipeline.hpp"
#include "stylip/synthetic_data.hpp"

namespace stylip {

struct LossConfig {
  double tau = 0.07;
  std::size_t batch_size = 8;
  std::size_t epochs = 10;
  double lr = 2e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::uint64_t seed = 0;

  void validate() const;

  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

/// A sample after the frozen vision encoder; training never needs the pixels again.
struct EncodedSample {
  ImageFeatures features;
  std::size_t label = 0;
  std::size_t domain = 0;
};

std::vector<EncodedSample> encode_samples(const VisionEncoder& vision, std::span<const Sample> samples);

/// Frozen encoders (borrowed) plus one set of projectors.
class StylipModel {
 public:
  StylipModel(const FrozenEncoders& encoders, PromptPipeline pipeline);

  const FrozenEncoders& encoders() const { return *encoders_; }
  PromptPipeline& pipeline() { return pipeline_; }
  const PromptPipeline& pipeline() const { return pipeline_; }

  /// delta(t_hat(x, n), f_v(x)) / tau for every n in `labels`, recorded on b's tape.
  Var logits(const Binding& b, const ImageFeatures& x, std::span<const std::size_t> labels, double tau) const;

  /// Cosine similarities delta(t_hat(x, n), f_v(x)); no gradients.
  std::vector<double> similarities(const ImageFeatures& x, std::span<const std::size_t> labels) const;

 private:
  const FrozenEncoders* encoders_;
  PromptPipeline pipeline_;
};

/// Softmax over `labels` of the temperature-scaled cosine similarities.
Tensor class_probabilities(const StylipModel& model, const ImageFeatures& x,
                           std::span<const std::size_t> labels, double tau);

/// Mean over the batch of -log p(t_hat(x, y) | x), recorded on b's tape.
Var contrastive_loss(const StylipModel& model, const Binding& b, std::span<const EncodedSample* const> batch,
                     std::span<const std::size_t> labels, double tau);
double contrastive_loss(const StylipModel& model, std::span<const EncodedSample> batch,
                        std::span<const std::size_t> labels, double tau);

/// Label with the highest class probability; ties go to the smallest label.
std::size_t predict(const StylipModel& model, const ImageFeatures& x, std::span<const std::size_t> labels,
                    double tau = 0.07);

struct EpochLog {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double train_acc = 0.0;
};

struct TrainedModel {
  StylipModel model;
  std::vector<EpochLog> log;

  std::string log_csv() const;
};

/// The projectors `train` starts from for this seed, with an empty log.
TrainedModel initial_model(const FrozenEncoders& encoders, const VariantConfig& variant, const LossConfig& cfg);

/// Adam step multiplier for a projector tensor: 1/sqrt(fan_in) for weight
/// matrices (rows are inputs), 1 for biases and context vectors.
double lr_scale_for(const Tensor& param);

/// Pools all source samples into one stream, shuffles it once per epoch and
/// runs Adam on the projectors. Only the pipeline's parameters change.
/// Throws Error if a batch loss stops being finite.
TrainedModel train(const FrozenEncoders& encoders, std::span<const EncodedSample> pool,
                   std::span<const std::size_t> labels, const VariantConfig& variant, const LossConfig& cfg);

/// Same, rendering the split's training pool (shots per class per source
/// domain) from `domains` first.
TrainedModel train(const FrozenEncoders& encoders, const ExperimentSplit& split,
                   std::span<const DomainSpec> domains, const VariantConfig& variant, const LossConfig& cfg,
                   std::uint64_t data_seed = 0);

/// |a - b| / max(|a|, |b|, 1e-6); the floor keeps near-zero gradients from
/// dominating the comparison.
double relative_error(double a, double b);

struct GradientCheck {
  std::string name;
  std::size_t checked = 0;
  double max_relative_error = 0.0;
};

/// Compares tape gradients of the batch loss with central differences of
/// step h, per parameter tensor. `max_coords` = 0 checks every scalar;
/// otherwise that many coordinates per tensor are drawn with `seed`.
std::vector<GradientCheck> check_gradients(StylipModel& model, std::span<const EncodedSample> batch,
                                           std::span<const std::size_t> labels, double tau, double h,
                                           std::size_t max_coords = 0, std::uint64_t seed = 0);

/// Training pool for one run: `shots` samples per class of `classes` from each source domain.
std::vector<Sample> training_pool(const ExperimentSplit& split, std::span<const DomainSpec> domains,
                                  std::uint64_t data_seed, std::uint64_t run_seed);

}  // namespace stylip
