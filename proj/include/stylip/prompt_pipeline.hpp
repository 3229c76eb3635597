#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stylip/encoders.hpp"
#include "stylip/parameters.hpp"
#include "stylip/tape.hpp"

namespace stylip {

// Added to the variance under the square root of the per-channel std.
inline constexpr double kVarianceEpsilon = 1e-5;

enum class StyleSource { kMultiScaleStats, kFreeLearnedVectors };
enum class ContentBranch { kMultiScale, kDeepestOnly, kOff };
enum class StatsUse { kMuAndSigma, kMuOnly, kSigmaOnly };
enum class BottleneckMode { kConv1x1, kGlobalAvgPool, kFlattenOnly };
enum class FusionMode { kLearnable, kMaxPool, kAvgPool };
enum class Preset { kStylip, kStylipCon, kStylipSty, kStylipStar };

std::string_view to_string(StyleSource v);
std::string_view to_string(ContentBranch v);
std::string_view to_string(StatsUse v);
std::string_view to_string(BottleneckMode v);
std::string_view to_string(FusionMode v);
std::string_view to_string(Preset v);

StyleSource parse_style_source(std::string_view s);
ContentBranch parse_content_branch(std::string_view s);
StatsUse parse_stats_use(std::string_view s);
BottleneckMode parse_bottleneck_mode(std::string_view s);
FusionMode parse_fusion_mode(std::string_view s);
Preset parse_preset(std::string_view s);

/// Which parts of the prompt pipeline are active, plus its sizes.
struct VariantConfig {
  StyleSource style_source = StyleSource::kMultiScaleStats;
  ContentBranch content_branch = ContentBranch::kMultiScale;
  StatsUse stats_use = StatsUse::kMuAndSigma;
  BottleneckMode bottleneck = BottleneckMode::kConv1x1;
  FusionMode fusion = FusionMode::kLearnable;
  std::size_t context_length = 4;       // M
  std::size_t bottleneck_channels = 3;  // C_hat
  std::size_t projector_depth = 1;

  static VariantConfig preset(Preset p);
  void validate() const;
  std::string to_text() const;
  static VariantConfig from_text(std::string_view text);

  friend bool operator==(const VariantConfig&, const VariantConfig&) = default;
};

// ---------------------------------------------------------------------------
// Style statistics

struct StyleStats {
  Tensor mu;     // [C]
  Tensor sigma;  // [C]
  Tensor concatenated() const;  // [mu; sigma]
};

/// Per-channel spatial mean and population std (with kVarianceEpsilon) of a
/// W x H x C feature map.
StyleStats style_stats(const Tensor& fmap);

Var channel_mean(Var fmap);
Var channel_std(Var fmap);
/// The style vector of one stage as selected by `use`: [mu; sigma], mu or sigma.
Var style_stats(Var fmap, StatsUse use);

// ---------------------------------------------------------------------------
// Stats -> token inputs

/// For every context position, the 0-based stages whose statistics feed it.
/// M == L: one stage each. M < L: contiguous bottom-up groups of L / M stages,
/// averaged. M > L: all L stages, then the top stages again in order.
std::vector<std::vector<std::size_t>> token_sources(std::size_t layers, std::size_t context_length);

/// Input width of every style projector; validates the grouping contract.
std::vector<std::size_t> token_input_dims(std::span<const std::size_t> stat_dims,
                                          std::size_t context_length);

std::vector<Var> map_stats_to_token_inputs(std::span<const Var> stats, std::size_t context_length);

// ---------------------------------------------------------------------------
// Prompt

/// t_y = [c_1(x)] ... [c_M(x)] [CLS_y]
struct Prompt {
  std::vector<Var> context;
  Var class_token;

  std::size_t size() const { return context.size() + 1; }
  std::vector<Var> tokens() const;
};

Prompt assemble_prompt(std::span<const Var> context, const ClassEmbeddingTable& classes,
                       std::size_t label);

// ---------------------------------------------------------------------------

/// All trainable projectors of one model: style projectors P_1..P_M (or free
/// context vectors), bottlenecks B_l, content projector P_C and fusion
/// projector P_A, with the forward computations that use them.
class PromptPipeline {
 public:
  PromptPipeline(const EncoderConfig& encoder, const VariantConfig& variant, std::uint64_t seed);

  const VariantConfig& variant() const { return variant_; }
  const EncoderConfig& encoder_config() const { return encoder_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  std::size_t token_input_dim(std::size_t m) const { return token_dims_.at(m); }
  // Stages that pass through a bottleneck (empty when the content branch is off).
  const std::vector<std::size_t>& content_stages() const { return content_stages_; }
  std::size_t bottleneck_output_size(std::size_t stage) const;
  std::size_t content_feature_size() const;  // length of the concatenated bottleneck outputs

  Binding bind(Tape& tape, bool trainable) const { return Binding(tape, params_, trainable); }

  /// c_1(x)..c_M(x) from the stage feature maps.
  std::vector<Var> context_tokens(const Binding& b, std::span<const Var> stage_maps) const;
  /// c_m = P_m(token_input); ignores the input for free-learned context vectors.
  Var style_token(const Binding& b, std::size_t m, Var token_input) const;
  /// B_l(f_v^l(x)) flattened.
  Var bottleneck(const Binding& b, std::size_t stage, Var fmap) const;
  /// Concatenated bottleneck outputs, before P_C.
  Var content_features(const Binding& b, std::span<const Var> stage_maps) const;
  /// P_C(content_features). Throws ContractError when the content branch is off.
  Var content_vector(const Binding& b, std::span<const Var> stage_maps) const;
  /// t_hat(x, y). Without content (branch off) the text embedding is returned as is.
  Var fuse(const Binding& b, std::optional<Var> content, Var text_embedding) const;

  Container to_checkpoint() const;
  static PromptPipeline from_checkpoint(const Container& c, const EncoderConfig& encoder);

 private:
  Var dense_stack(const Binding& b, const std::string& prefix, Var x) const;
  void add_dense_stack(const std::string& prefix, std::size_t in, std::size_t out, class Rng& rng);

  EncoderConfig encoder_;
  VariantConfig variant_;
  std::vector<std::size_t> token_dims_;
  std::vector<std::size_t> content_stages_;
  ParameterSet params_;
};

}  // namespace stylip
