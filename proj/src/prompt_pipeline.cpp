#include "stylip/prompt_pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "stylip/errors.hpp"
#include "stylip/key_value.hpp"
#include "stylip/ops.hpp"
#include "stylip/random.hpp"

namespace stylip {
namespace {

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

constexpr NameTable<StyleSource, 2> kStyleSources{{
    {StyleSource::kMultiScaleStats, "multi-scale-stats"},
    {StyleSource::kFreeLearnedVectors, "free-learned-vectors"},
}};
constexpr NameTable<ContentBranch, 3> kContentBranches{{
    {ContentBranch::kMultiScale, "multi-scale"},
    {ContentBranch::kDeepestOnly, "deepest-only"},
    {ContentBranch::kOff, "off"},
}};
constexpr NameTable<StatsUse, 3> kStatsUses{{
    {StatsUse::kMuAndSigma, "mu-and-sigma"},
    {StatsUse::kMuOnly, "mu-only"},
    {StatsUse::kSigmaOnly, "sigma-only"},
}};
constexpr NameTable<BottleneckMode, 3> kBottlenecks{{
    {BottleneckMode::kConv1x1, "conv1x1"},
    {BottleneckMode::kGlobalAvgPool, "gap"},
    {BottleneckMode::kFlattenOnly, "flatten"},
}};
constexpr NameTable<FusionMode, 3> kFusions{{
    {FusionMode::kLearnable, "learnable"},
    {FusionMode::kMaxPool, "max-pool"},
    {FusionMode::kAvgPool, "avg-pool"},
}};
constexpr NameTable<Preset, 4> kPresets{{
    {Preset::kStylip, "STYLIP"},
    {Preset::kStylipCon, "STYLIP-CON"},
    {Preset::kStylipSty, "STYLIP-STY"},
    {Preset::kStylipStar, "STYLIP-STAR"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const NameTable<E, N>& table, E v) {
  for (const auto& [e, n] : table) {
    if (e == v) return n;
  }
  return "?";
}

template <typename E, std::size_t N>
E parse_name(const NameTable<E, N>& table, std::string_view s, const char* what) {
  for (const auto& [e, n] : table) {
    if (n == s) return e;
  }
  std::string allowed;
  for (const auto& [e, n] : table) {
    if (!allowed.empty()) allowed += ", ";
    allowed += n;
  }
  throw ConfigError("unknown " + std::string(what) + " '" + std::string(s) + "' (expected one of " +
                    allowed + ")");
}

void require_fmap(const char* op, const Var& fmap) {
  if (fmap.value().rank() != 3) {
    throw DimensionError(std::string(op) + ": expected a W x H x C map, got " + shape_string(fmap.shape()));
  }
  if (fmap.shape()[0] * fmap.shape()[1] == 0) {
    throw DimensionError(std::string(op) + ": empty spatial extent " + shape_string(fmap.shape()));
  }
}

}  // namespace

std::string_view to_string(StyleSource v) { return name_of(kStyleSources, v); }
std::string_view to_string(ContentBranch v) { return name_of(kContentBranches, v); }
std::string_view to_string(StatsUse v) { return name_of(kStatsUses, v); }
std::string_view to_string(BottleneckMode v) { return name_of(kBottlenecks, v); }
std::string_view to_string(FusionMode v) { return name_of(kFusions, v); }
std::string_view to_string(Preset v) { return name_of(kPresets, v); }

StyleSource parse_style_source(std::string_view s) { return parse_name(kStyleSources, s, "style source"); }
ContentBranch parse_content_branch(std::string_view s) {
  return parse_name(kContentBranches, s, "content branch");
}
StatsUse parse_stats_use(std::string_view s) { return parse_name(kStatsUses, s, "stats use"); }
BottleneckMode parse_bottleneck_mode(std::string_view s) {
  return parse_name(kBottlenecks, s, "bottleneck mode");
}
FusionMode parse_fusion_mode(std::string_view s) { return parse_name(kFusions, s, "fusion mode"); }
Preset parse_preset(std::string_view s) { return parse_name(kPresets, s, "preset"); }

// ---------------------------------------------------------------------------
// VariantConfig

VariantConfig VariantConfig::preset(Preset p) {
  VariantConfig v;
  switch (p) {
    case Preset::kStylip:
      break;
    case Preset::kStylipCon:
      v.style_source = StyleSource::kFreeLearnedVectors;
      break;
    case Preset::kStylipSty:
      v.content_branch = ContentBranch::kOff;
      break;
    case Preset::kStylipStar:
      v.content_branch = ContentBranch::kDeepestOnly;
      break;
  }
  return v;
}

void VariantConfig::validate() const {
  if (context_length == 0) throw ConfigError("context length M must be at least 1");
  if (bottleneck_channels == 0) throw ConfigError("bottleneck channels C_hat must be at least 1");
  if (projector_depth < 1 || projector_depth > 3) throw ConfigError("projector depth must be 1, 2 or 3");
}

std::string VariantConfig::to_text() const {
  std::ostringstream os;
  os << "style_source = " << to_string(style_source) << '\n'
     << "content_branch = " << to_string(content_branch) << '\n'
     << "stats_use = " << to_string(stats_use) << '\n'
     << "bottleneck = " << to_string(bottleneck) << '\n'
     << "fusion = " << to_string(fusion) << '\n'
     << "M = " << context_length << '\n'
     << "C_hat = " << bottleneck_channels << '\n'
     << "depth = " << projector_depth << '\n';
  return os.str();
}

VariantConfig VariantConfig::from_text(std::string_view text) {
  VariantConfig v;
  for (const auto& kv : parse_key_values(text)) {
    if (kv.key == "style_source") v.style_source = parse_style_source(kv.value);
    else if (kv.key == "content_branch") v.content_branch = parse_content_branch(kv.value);
    else if (kv.key == "stats_use") v.stats_use = parse_stats_use(kv.value);
    else if (kv.key == "bottleneck") v.bottleneck = parse_bottleneck_mode(kv.value);
    else if (kv.key == "fusion") v.fusion = parse_fusion_mode(kv.value);
    else if (kv.key == "M") v.context_length = parse_size(kv);
    else if (kv.key == "C_hat") v.bottleneck_channels = parse_size(kv);
    else if (kv.key == "depth") v.projector_depth = parse_size(kv);
    else throw ConfigError("line " + std::to_string(kv.line) + ": unknown variant key '" + kv.key + "'");
  }
  v.validate();
  return v;
}

// ---------------------------------------------------------------------------
// Style statistics

namespace {

struct ChannelMoments {
  Tensor mu;
  Tensor variance;  // population, without epsilon
};

// Sums run over each channel's values in sorted order, so any permutation of
// the pixels gives bit-identical statistics.
ChannelMoments channel_moments(const Tensor& f, std::size_t sites, std::size_t c) {
  ChannelMoments m{Tensor({c}), Tensor({c})};
  const double inv = 1.0 / static_cast<double>(sites);
  std::vector<double> values(sites);
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t s = 0; s < sites; ++s) values[s] = f[s * c + k];
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mu = sum * inv;
    double ss = 0.0;
    for (double v : values) ss += (v - mu) * (v - mu);
    m.mu[k] = mu;
    m.variance[k] = ss * inv;
  }
  return m;
}

}  // namespace

Tensor StyleStats::concatenated() const {
  Tensor out({mu.size() + sigma.size()});
  std::copy(mu.data().begin(), mu.data().end(), out.data().begin());
  std::copy(sigma.data().begin(), sigma.data().end(), out.data().begin() + static_cast<long>(mu.size()));
  return out;
}

StyleStats style_stats(const Tensor& fmap) {
  Tape tape;
  Var f = tape.constant_ref(fmap);
  return {channel_mean(f).value(), channel_std(f).value()};
}

Var channel_mean(Var fmap) {
  require_fmap("style_stats", fmap);
  const std::size_t sites = fmap.shape()[0] * fmap.shape()[1];
  const std::size_t c = fmap.shape()[2];
  const auto moments = channel_moments(fmap.value(), sites, c);
  const double inv = 1.0 / static_cast<double>(sites);
  return fmap.tape().record("channel_mean", moments.mu, {fmap},
                            [sites, c, inv](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
                              for (std::size_t s = 0; s < sites; ++s)
                                for (std::size_t k = 0; k < c; ++k) (*gi[0])[s * c + k] += inv * g[k];
                            });
}

Var channel_std(Var fmap) {
  require_fmap("style_stats", fmap);
  const std::size_t sites = fmap.shape()[0] * fmap.shape()[1];
  const std::size_t c = fmap.shape()[2];
  auto moments = channel_moments(fmap.value(), sites, c);
  const double inv = 1.0 / static_cast<double>(sites);
  Tensor sigma = std::move(moments.variance);
  for (double& v : sigma.data()) v = std::sqrt(v + kVarianceEpsilon);
  return fmap.tape().record(
      "channel_std", std::move(sigma), {fmap},
      [fmap, mu = std::move(moments.mu), sites, c, inv](const Tensor& sd, const Tensor& g,
                                                        std::span<Tensor* const> gi) {
        // d sigma_k / d f_{s,k} = (f_{s,k} - mu_k) / (WH sigma_k)
        const auto& fv = fmap.value();
        for (std::size_t s = 0; s < sites; ++s)
          for (std::size_t k = 0; k < c; ++k)
            (*gi[0])[s * c + k] += g[k] * (fv[s * c + k] - mu[k]) * inv / sd[k];
      });
}

Var style_stats(Var fmap, StatsUse use) {
  switch (use) {
    case StatsUse::kMuOnly:
      return channel_mean(fmap);
    case StatsUse::kSigmaOnly:
      return channel_std(fmap);
    case StatsUse::kMuAndSigma:
      break;
  }
  const std::array<Var, 2> parts{channel_mean(fmap), channel_std(fmap)};
  return ops::concat(parts, 0);
}

// ---------------------------------------------------------------------------
// Token mapping

std::vector<std::vector<std::size_t>> token_sources(std::size_t layers, std::size_t context_length) {
  if (layers == 0 || context_length == 0) throw ConfigError("token mapping needs L >= 1 and M >= 1");
  std::vector<std::vector<std::size_t>> out;
  if (context_length <= layers) {
    if (layers % context_length != 0) {
      throw ConfigError("context length M = " + std::to_string(context_length) +
                        " must divide the stage count L = " + std::to_string(layers));
    }
    const std::size_t group = layers / context_length;
    for (std::size_t m = 0; m < context_length; ++m) {
      std::vector<std::size_t> g;
      for (std::size_t j = 0; j < group; ++j) g.push_back(m * group + j);
      out.push_back(std::move(g));
    }
    return out;
  }
  for (std::size_t l = 0; l < layers; ++l) out.push_back({l});
  const std::size_t extra = context_length - layers;
  const std::size_t top = std::min(extra, layers);
  for (std::size_t j = 0; j < extra; ++j) out.push_back({layers - top + j % top});
  return out;
}

std::vector<std::size_t> token_input_dims(std::span<const std::size_t> stat_dims,
                                          std::size_t context_length) {
  std::vector<std::size_t> dims;
  for (const auto& group : token_sources(stat_dims.size(), context_length)) {
    const std::size_t d = stat_dims[group.front()];
    for (auto l : group) {
      if (stat_dims[l] != d) {
        throw ConfigError("cannot average style statistics of unequal widths (" + std::to_string(d) +
                          " vs " + std::to_string(stat_dims[l]) + "); use a uniform-width encoder");
      }
    }
    dims.push_back(d);
  }
  return dims;
}

std::vector<Var> map_stats_to_token_inputs(std::span<const Var> stats, std::size_t context_length) {
  std::vector<std::size_t> dims;
  for (const Var& s : stats) dims.push_back(s.size());
  token_input_dims(dims, context_length);

  std::vector<Var> out;
  for (const auto& group : token_sources(stats.size(), context_length)) {
    if (group.size() == 1) {
      out.push_back(stats[group.front()]);
      continue;
    }
    Var acc = stats[group[0]];
    for (std::size_t j = 1; j < group.size(); ++j) acc = ops::add(acc, stats[group[j]]);
    out.push_back(ops::scale(acc, 1.0 / static_cast<double>(group.size())));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prompt

std::vector<Var> Prompt::tokens() const {
  std::vector<Var> t = context;
  t.push_back(class_token);
  return t;
}

Prompt assemble_prompt(std::span<const Var> context, const ClassEmbeddingTable& classes,
                       std::size_t label) {
  if (context.empty()) throw ContractError("assemble_prompt: no context tokens");
  Prompt p;
  p.context.assign(context.begin(), context.end());
  p.class_token = context[0].tape().constant_ref(classes.row(label));
  return p;
}

// ---------------------------------------------------------------------------
// PromptPipeline

PromptPipeline::PromptPipeline(const EncoderConfig& encoder, const VariantConfig& variant,
                               std::uint64_t seed)
    : encoder_(encoder), variant_(variant) {
  encoder.validate();
  variant.validate();
  if (encoder.context_length != variant.context_length) {
    throw ConfigError("text encoder built for M = " + std::to_string(encoder.context_length) +
                      " but variant uses M = " + std::to_string(variant.context_length));
  }
  const std::size_t layers = encoder.stage_count();
  const std::size_t m_count = variant.context_length;
  const std::size_t d = encoder.embed_dim;
  const std::size_t d_tok = encoder.token_dim;

  Rng rng(derive_seed({seed, 11}));

  if (variant.style_source == StyleSource::kMultiScaleStats) {
    std::vector<std::size_t> stat_dims;
    for (auto w : encoder.stage_widths) stat_dims.push_back(variant.stats_use == StatsUse::kMuAndSigma ? 2 * w : w);
    token_dims_ = token_input_dims(stat_dims, m_count);
    for (std::size_t m = 0; m < m_count; ++m) add_dense_stack("style." + std::to_string(m), token_dims_[m], d_tok, rng);
  } else {
    token_dims_.assign(m_count, 0);
    for (std::size_t m = 0; m < m_count; ++m) {
      Tensor v({d_tok});
      for (double& x : v.data()) x = 0.02 * rng.normal();
      params_.add("context." + std::to_string(m), std::move(v));
    }
  }

  switch (variant.content_branch) {
    case ContentBranch::kMultiScale:
      for (std::size_t l = 0; l < layers; ++l) content_stages_.push_back(l);
      break;
    case ContentBranch::kDeepestOnly:
      content_stages_.push_back(layers - 1);
      break;
    case ContentBranch::kOff:
      break;
  }
  if (!content_stages_.empty()) {
    if (variant.bottleneck == BottleneckMode::kConv1x1) {
      for (auto l : content_stages_) {
        const std::size_t c = encoder.stage_widths[l];
        Tensor k({c, variant.bottleneck_channels});
        const double bound = 1.0 / std::sqrt(static_cast<double>(c));
        for (double& x : k.data()) x = rng.uniform(-bound, bound);
        params_.add("bottleneck." + std::to_string(l), std::move(k));
      }
    }
    add_dense_stack("content", content_feature_size(), d, rng);
    if (variant.fusion == FusionMode::kLearnable) add_dense_stack("fusion", 2 * d, d, rng);
  }
}

void PromptPipeline::add_dense_stack(const std::string& prefix, std::size_t in, std::size_t out, Rng& rng) {
  for (std::size_t layer = 0; layer < variant_.projector_depth; ++layer) {
    const std::size_t fan_in = layer == 0 ? in : out;
    Tensor w({fan_in, out});
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : w.data()) x = rng.uniform(-bound, bound);
    params_.add(prefix + "." + std::to_string(layer) + ".weight", std::move(w));
    params_.add(prefix + "." + std::to_string(layer) + ".bias", Tensor({out}));
  }
}

Var PromptPipeline::dense_stack(const Binding& b, const std::string& prefix, Var x) const {
  for (std::size_t layer = 0; layer < variant_.projector_depth; ++layer) {
    const std::string p = prefix + "." + std::to_string(layer);
    Var w = b(p + ".weight");
    if (x.value().rank() != 1 || x.size() != w.shape()[0]) {
      throw DimensionError(prefix + ": input of shape " + shape_string(x.shape()) +
                           " does not match weight " + shape_string(w.shape()));
    }
    Var y = ops::matmul(ops::reshape(x, {1, x.size()}), w);
    y = ops::add_bias(ops::reshape(y, {w.shape()[1]}), b(p + ".bias"));
    if (layer + 1 < variant_.projector_depth) y = ops::tanh(y);
    x = y;
  }
  return x;
}

std::size_t PromptPipeline::bottleneck_output_size(std::size_t stage) const {
  const std::size_t s = encoder_.stage_spatial(stage);
  const std::size_t c = encoder_.stage_widths.at(stage);
  switch (variant_.bottleneck) {
    case BottleneckMode::kConv1x1:
      return s * s * variant_.bottleneck_channels;
    case BottleneckMode::kGlobalAvgPool:
      return c;
    case BottleneckMode::kFlattenOnly:
      return s * s * c;
  }
  return 0;
}

std::size_t PromptPipeline::content_feature_size() const {
  std::size_t n = 0;
  for (auto l : content_stages_) n += bottleneck_output_size(l);
  return n;
}

std::vector<Var> PromptPipeline::context_tokens(const Binding& b, std::span<const Var> stage_maps) const {
  const std::size_t m_count = variant_.context_length;
  std::vector<Var> tokens;
  tokens.reserve(m_count);
  if (variant_.style_source == StyleSource::kFreeLearnedVectors) {
    for (std::size_t m = 0; m < m_count; ++m) tokens.push_back(style_token(b, m, Var()));
    return tokens;
  }
  if (stage_maps.size() != encoder_.stage_count()) {
    throw DimensionError("expected " + std::to_string(encoder_.stage_count()) + " stage maps, got " +
                         std::to_string(stage_maps.size()));
  }
  std::vector<Var> stats;
  stats.reserve(stage_maps.size());
  for (const Var& f : stage_maps) stats.push_back(style_stats(f, variant_.stats_use));
  const auto inputs = map_stats_to_token_inputs(stats, m_count);
  for (std::size_t m = 0; m < m_count; ++m) tokens.push_back(style_token(b, m, inputs[m]));
  return tokens;
}

Var PromptPipeline::style_token(const Binding& b, std::size_t m, Var token_input) const {
  if (m >= variant_.context_length) throw DimensionError("style projector index out of range");
  if (variant_.style_source == StyleSource::kFreeLearnedVectors) return b("context." + std::to_string(m));
  if (token_input.value().rank() != 1 || token_input.size() != token_dims_[m]) {
    throw DimensionError("style projector " + std::to_string(m) + " expects input [" +
                         std::to_string(token_dims_[m]) + "], got " + shape_string(token_input.shape()));
  }
  return dense_stack(b, "style." + std::to_string(m), token_input);
}

Var PromptPipeline::bottleneck(const Binding& b, std::size_t stage, Var fmap) const {
  require_fmap("bottleneck", fmap);
  switch (variant_.bottleneck) {
    case BottleneckMode::kConv1x1: {
      Var y = ops::conv1x1(fmap, b("bottleneck." + std::to_string(stage)));
      return ops::reshape(y, {y.size()});
    }
    case BottleneckMode::kGlobalAvgPool:
      return channel_mean(fmap);
    case BottleneckMode::kFlattenOnly:
      return ops::reshape(fmap, {fmap.size()});
  }
  throw ContractError("unknown bottleneck mode");
}

Var PromptPipeline::content_features(const Binding& b, std::span<const Var> stage_maps) const {
  if (content_stages_.empty()) throw ContractError("content branch is disabled for this variant");
  if (stage_maps.size() != encoder_.stage_count()) {
    throw DimensionError("expected " + std::to_string(encoder_.stage_count()) + " stage maps, got " +
                         std::to_string(stage_maps.size()));
  }
  std::vector<Var> parts;
  for (auto l : content_stages_) parts.push_back(bottleneck(b, l, stage_maps[l]));
  return parts.size() == 1 ? parts[0] : ops::concat(parts, 0);
}

Var PromptPipeline::content_vector(const Binding& b, std::span<const Var> stage_maps) const {
  return dense_stack(b, "content", content_features(b, stage_maps));
}

Var PromptPipeline::fuse(const Binding& b, std::optional<Var> content, Var text_embedding) const {
  if (!content) {
    if (!content_stages_.empty()) throw ContractError("fuse: content vector required for this variant");
    return text_embedding;
  }
  if (content->shape() != text_embedding.shape() || text_embedding.value().rank() != 1) {
    throw DimensionError("fuse: content " + shape_string(content->shape()) + " vs text " +
                         shape_string(text_embedding.shape()));
  }
  switch (variant_.fusion) {
    case FusionMode::kMaxPool:
      return ops::maximum(*content, text_embedding);
    case FusionMode::kAvgPool:
      return ops::scale(ops::add(*content, text_embedding), 0.5);
    case FusionMode::kLearnable:
      break;
  }
  const std::array<Var, 2> parts{*content, text_embedding};
  return dense_stack(b, "fusion", ops::concat(parts, 0));
}

Container PromptPipeline::to_checkpoint() const {
  Container c;
  c.kind = ContainerKind::kProjectors;
  c.config = variant_.to_text();
  c.tensors = params_.items();
  return c;
}

PromptPipeline PromptPipeline::from_checkpoint(const Container& c, const EncoderConfig& encoder) {
  if (c.kind != ContainerKind::kProjectors) throw Error("container does not hold projector weights");
  PromptPipeline p(encoder, VariantConfig::from_text(c.config), 0);
  if (c.tensors.size() != p.params_.size()) throw Error("checkpoint tensor count does not match variant");
  for (const auto& t : c.tensors) {
    Tensor& dst = p.params_.at(t.name);
    if (dst.shape() != t.value.shape()) throw DimensionError("checkpoint tensor '" + t.name + "' has wrong shape");
    dst = t.value;
  }
  return p;
}

}  // namespace stylip
