#include "self_check.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <string>

#include "stylip/experiment.hpp"
#include "stylip/key_value.hpp"
#include "stylip/random.hpp"

namespace stylip {
namespace {

EncoderConfig tiny_encoder(std::size_t m) {
  EncoderConfig c;
  c.image_size = 8;
  c.stage_widths = {2, 3};
  c.embed_dim = 6;
  c.token_dim = 6;
  c.context_length = m;
  c.num_classes = 3;
  return c;
}

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

struct Outcome {
  bool ok = true;
  std::string detail;
};

Outcome check_gradients_all_variants() {
  std::vector<VariantConfig> variants;
  for (auto p : {Preset::kStylip, Preset::kStylipCon, Preset::kStylipSty, Preset::kStylipStar}) {
    variants.push_back(VariantConfig::preset(p));
  }
  VariantConfig v = VariantConfig::preset(Preset::kStylip);
  v.fusion = FusionMode::kMaxPool;
  variants.push_back(v);
  v.fusion = FusionMode::kAvgPool;
  v.stats_use = StatsUse::kMuOnly;
  variants.push_back(v);
  v = VariantConfig::preset(Preset::kStylip);
  v.bottleneck = BottleneckMode::kGlobalAvgPool;
  v.stats_use = StatsUse::kSigmaOnly;
  v.projector_depth = 3;
  variants.push_back(v);
  v.bottleneck = BottleneckMode::kFlattenOnly;
  v.projector_depth = 2;
  variants.push_back(v);

  double worst = 0.0;
  std::size_t scalars = 0;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    VariantConfig var = variants[i];
    var.context_length = 2;
    var.bottleneck_channels = 2;
    const auto enc = build_frozen(100 + i, tiny_encoder(2));
    Rng rng(derive_seed({7, i}));
    std::vector<EncodedSample> batch;
    for (std::size_t k = 0; k < 2; ++k) {
      batch.push_back({enc.vision.forward(random_tensor({8, 8, 3}, rng, 0.0, 1.0)), k, 0});
    }
    StylipModel model(enc, PromptPipeline(enc.config, var, 200 + i));
    const std::vector<std::size_t> labels{0, 1, 2};
    for (const auto& g : check_gradients(model, batch, labels, 0.07, 1e-4)) {
      worst = std::max(worst, g.max_relative_error);
      scalars += g.checked;
    }
  }
  return {worst <= 1e-3, std::to_string(scalars) + " scalars over " + std::to_string(variants.size()) +
                             " variants, worst relative error " + format_double(worst)};
}

Outcome check_style_laws() {
  Rng rng(11);
  double worst_scale = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t w = 2 + rng.index(4), h = 2 + rng.index(4), c = 1 + rng.index(4);
    Tensor f = random_tensor({w, h, c}, rng);
    const auto s = style_stats(f);
    std::vector<std::size_t> order(w * h);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    Tensor r({w, h, c});
    for (std::size_t p = 0; p < w * h; ++p)
      for (std::size_t ch = 0; ch < c; ++ch) r[p * c + ch] = f[order[p] * c + ch];
    const auto sr = style_stats(r);
    ok = ok && sr.mu == s.mu && sr.sigma == s.sigma;
    for (double sig : s.sigma.data()) ok = ok && sig >= 0.0;
    const double a = rng.uniform(0.5, 3.0);
    Tensor scaled = f;
    for (double& x : scaled.data()) x *= a;
    const auto ss = style_stats(scaled);
    for (std::size_t ch = 0; ch < c; ++ch) {
      worst_scale = std::max(worst_scale, std::abs(ss.mu[ch] - a * s.mu[ch]));
      const double var = s.sigma[ch] * s.sigma[ch] - kVarianceEpsilon;
      const double expected = std::sqrt(a * a * var + kVarianceEpsilon);
      worst_scale = std::max(worst_scale, std::abs(ss.sigma[ch] - expected));
    }
    Tensor flat({w, h, c}, rng.uniform(-2.0, 2.0));
    const auto sf = style_stats(flat);
    for (double sig : sf.sigma.data()) ok = ok && std::abs(sig - std::sqrt(kVarianceEpsilon)) <= 1e-12;
  }
  return {ok && worst_scale <= 1e-9, "worst scaling deviation " + format_double(worst_scale)};
}

Outcome check_token_mapping() {
  bool ok = true;
  const auto id = token_sources(4, 4);
  for (std::size_t m = 0; m < 4; ++m) ok = ok && id[m] == std::vector<std::size_t>{m};
  const auto grouped = token_sources(12, 4);
  for (std::size_t m = 0; m < 4; ++m) ok = ok && grouped[m] == std::vector<std::size_t>{3 * m, 3 * m + 1, 3 * m + 2};
  const auto replicated = token_sources(12, 16);
  for (std::size_t m = 12; m < 16; ++m) ok = ok && replicated[m] == std::vector<std::size_t>{m - 4};
  return {ok, "M=L, L=12/M=4 and L=12/M=16"};
}

Outcome check_probabilities() {
  const auto enc = build_frozen(3, tiny_encoder(2));
  VariantConfig v = VariantConfig::preset(Preset::kStylip);
  v.context_length = 2;
  StylipModel model(enc, PromptPipeline(enc.config, v, 4));
  Rng rng(5);
  double worst = 0.0;
  bool positive = true;
  for (int i = 0; i < 20; ++i) {
    const auto x = enc.vision.forward(random_tensor({8, 8, 3}, rng, 0.0, 1.0));
    const auto p = class_probabilities(model, x, std::vector<std::size_t>{0, 1, 2}, 0.07);
    double s = 0.0;
    for (double q : p.data()) {
      s += q;
      positive = positive && q > 0.0;
    }
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return {positive && worst <= 1e-6, "worst |sum - 1| " + format_double(worst)};
}

Outcome check_harmonic_mean() {
  const double a = harmonic_mean(82.69, 63.22), b = harmonic_mean(80.47, 71.69);
  return {std::abs(a - 71.66) <= 0.01 && std::abs(b - 75.83) <= 0.01,
          "HM(82.69, 63.22) = " + format_double(a) + ", HM(80.47, 71.69) = " + format_double(b)};
}

}  // namespace

bool run_self_check(std::ostream& out) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks{
      {"gradients", check_gradients_all_variants},
      {"style-statistics", check_style_laws},
      {"token-mapping", check_token_mapping},
      {"probabilities", check_probabilities},
      {"harmonic-mean", check_harmonic_mean},
  };
  bool all = true;
  for (const auto& [name, fn] : checks) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    all = all && o.ok;
    out << (o.ok ? "PASS " : "FAIL ") << name << ": " << o.detail << '\n';
  }
  return all;
}

}  // namespace stylip
