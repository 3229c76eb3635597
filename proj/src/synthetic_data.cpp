#include "stylip/synthetic_data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "stylip/errors.hpp"
#include "stylip/random.hpp"

namespace stylip {
namespace {

bool inside_shape(std::size_t class_id, double x, double y) {
  const double ax = std::abs(x), ay = std::abs(y);
  const double r = std::hypot(x, y);
  switch (class_id) {
    case 0:  // circle
      return r <= 1.0;
    case 1:  // square
      return std::max(ax, ay) <= 0.8;
    case 2:  // triangle, apex up
      return y >= -0.6 && y <= 1.0 - std::sqrt(3.0) * ax;
    case 3:  // cross
      return (ax <= 0.28 && ay <= 1.0) || (ay <= 0.28 && ax <= 1.0);
    case 4:  // ring
      return r <= 1.0 && r >= 0.6;
    case 5:  // bar
      return ax <= 1.0 && ay <= 0.3;
    case 6:  // L-shape
      return (x >= -0.75 && x <= -0.25 && y >= -0.85 && y <= 0.85) ||
             (x >= -0.75 && x <= 0.75 && y >= -0.85 && y <= -0.35);
    case 7:  // diamond
      return ax + ay <= 1.0;
    default:
      return false;
  }
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

std::string_view to_string(Texture t) {
  switch (t) {
    case Texture::kFlat: return "flat";
    case Texture::kStripes: return "stripes";
    case Texture::kChecker: return "checker";
    case Texture::kSpeckle: return "speckle";
  }
  return "?";
}

std::vector<DomainSpec> default_domains() {
  return {
      {0, "flat-warm", {0.92, 0.45, 0.12}, {0.98, 0.92, 0.80}, Texture::kFlat, 0.0, 0.0, 0.02, 1.0, 0.0},
      {1, "striped-cool", {0.10, 0.35, 0.85}, {0.75, 0.90, 0.95}, Texture::kStripes, 4.0, 0.35, 0.03, 1.0, 0.0},
      {2, "checker-gray", {0.25, 0.25, 0.25}, {0.72, 0.72, 0.72}, Texture::kChecker, 4.0, 0.30, 0.03, 0.9, 0.0},
      {3, "speckle-dark", {0.85, 0.85, 0.60}, {0.10, 0.10, 0.16}, Texture::kSpeckle, 0.3, 0.45, 0.05, 1.1, -0.02},
  };
}

double ShapeMask::fill_fraction() const {
  if (bits.empty()) return 0.0;
  return static_cast<double>(std::count(bits.begin(), bits.end(), 1)) / static_cast<double>(bits.size());
}

ShapeMask render_mask(std::size_t class_id, std::uint64_t seed) {
  if (class_id >= kShapeNames.size()) {
    throw LookupError("unknown shape class " + std::to_string(class_id));
  }
  Rng rng(derive_seed({seed, 0x6d61736b}));
  const double cx = kImageSize / 2.0 + rng.uniform(-0.5, 0.5);
  const double cy = kImageSize / 2.0 + rng.uniform(-0.5, 0.5);
  const double radius = rng.uniform(9.5, 10.5);
  const double angle = rng.uniform(-3.0, 3.0) * std::numbers::pi / 180.0;
  const double c = std::cos(angle), s = std::sin(angle);

  ShapeMask mask;
  mask.bits.assign(kImageSize * kImageSize, 0);
  for (std::size_t px = 0; px < kImageSize; ++px) {
    for (std::size_t py = 0; py < kImageSize; ++py) {
      const double u = (static_cast<double>(px) + 0.5 - cx) / radius;
      const double v = (static_cast<double>(py) + 0.5 - cy) / radius;
      // Image rows grow downwards; flip so "up" in shape space is up on screen.
      const double x = c * u + s * v;
      const double y = -(-s * u + c * v);
      mask.bits[px * kImageSize + py] = inside_shape(class_id, x, y) ? 1 : 0;
    }
  }
  return mask;
}

Sample render_sample(std::size_t class_id, const DomainSpec& domain, std::uint64_t seed) {
  Sample out;
  out.mask = render_mask(class_id, seed);
  out.label = class_id;
  out.domain = domain.id;
  out.seed = seed;
  out.image = Tensor({kImageSize, kImageSize, 3});

  Rng rng(derive_seed({seed, 0x7374796c, domain.id}));
  const double period = std::max(domain.frequency, 1.0);
  for (std::size_t px = 0; px < kImageSize; ++px) {
    for (std::size_t py = 0; py < kImageSize; ++py) {
      double t = 0.0;
      switch (domain.texture) {
        case Texture::kFlat:
          break;
        case Texture::kStripes:
          t = static_cast<double>(static_cast<std::size_t>((px + py) / period) % 2);
          break;
        case Texture::kChecker:
          t = static_cast<double>((static_cast<std::size_t>(px / period) + static_cast<std::size_t>(py / period)) % 2);
          break;
        case Texture::kSpeckle:
          t = rng.uniform() < domain.frequency ? 1.0 : 0.0;
          break;
      }
      const bool on = out.mask.bits[px * kImageSize + py] != 0;
      const Rgb& base = on ? domain.foreground : domain.background;
      const double shade = 1.0 - domain.texture_strength * t;
      const double rgb[3] = {base.r, base.g, base.b};
      for (std::size_t ch = 0; ch < 3; ++ch) {
        double v = rgb[ch] * shade;
        v = (v - 0.5) * domain.contrast + 0.5 + domain.brightness;
        v += domain.noise_sigma * rng.normal();
        out.image[(px * kImageSize + py) * 3 + ch] = clamp01(v);
      }
    }
  }
  return out;
}

std::vector<std::size_t> DomainDataset::per_class_counts(std::size_t num_classes) const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (const auto& s : samples) {
    if (s.label < num_classes) ++counts[s.label];
  }
  return counts;
}

DomainDataset generate_dataset(const DomainSpec& domain, std::span<const std::size_t> classes,
                               std::size_t n_per_class, std::uint64_t seed) {
  if (n_per_class == 0) throw ContractError("generate_dataset: n_per_class must be at least 1");
  DomainDataset ds;
  ds.domain = domain.id;
  ds.samples.reserve(classes.size() * n_per_class);
  for (auto c : classes) {
    for (std::size_t k = 0; k < n_per_class; ++k) {
      ds.samples.push_back(render_sample(c, domain, derive_seed({seed, c, k})));
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::kMultiDg: return "multi-dg";
    case Protocol::kSingleDg: return "single-dg";
    case Protocol::kBaseToNewInDomain: return "base-to-new-in-domain";
    case Protocol::kBaseToNewCrossDomain: return "base-to-new-cross-domain";
  }
  return "?";
}

Protocol parse_protocol(std::string_view s) {
  for (auto p : {Protocol::kMultiDg, Protocol::kSingleDg, Protocol::kBaseToNewInDomain,
                 Protocol::kBaseToNewCrossDomain}) {
    if (to_string(p) == s) return p;
  }
  throw ConfigError("unknown protocol '" + std::string(s) +
                    "' (expected multi-dg, single-dg, base-to-new-in-domain or base-to-new-cross-domain)");
}

bool is_base_to_new(Protocol p) {
  return p == Protocol::kBaseToNewInDomain || p == Protocol::kBaseToNewCrossDomain;
}

void ExperimentSplit::validate() const {
  if (sources.empty()) throw ContractError("split has no source domain");
  if (targets.empty()) throw ContractError("split has no target domain");
  if (train_classes.empty() || test_classes.empty()) throw ContractError("split has an empty class set");
  std::vector<std::size_t> y = train_classes, yt = test_classes;
  std::sort(y.begin(), y.end());
  std::sort(yt.begin(), yt.end());
  if (is_base_to_new(protocol)) {
    std::vector<std::size_t> common;
    std::set_intersection(y.begin(), y.end(), yt.begin(), yt.end(), std::back_inserter(common));
    if (!common.empty()) throw ContractError("base-to-new split has overlapping base and new classes");
  } else if (y != yt) {
    throw ContractError("closed-set split must train and test on the same classes");
  }
}

ExperimentSplit make_split(Protocol protocol, std::size_t num_domains, std::size_t num_classes,
                           std::size_t anchor, std::size_t shots, std::uint64_t seed, bool shuffle_classes) {
  if (anchor >= num_domains) {
    throw ConfigError("domain index " + std::to_string(anchor) + " out of range for " +
                      std::to_string(num_domains) + " domains");
  }
  if (num_classes == 0) throw ConfigError("split needs at least one class");
  if (shots == 0) throw ConfigError("shots must be at least 1");
  const bool b2n = is_base_to_new(protocol);
  if ((protocol == Protocol::kMultiDg || protocol == Protocol::kSingleDg ||
       protocol == Protocol::kBaseToNewCrossDomain) && num_domains < 2) {
    throw ConfigError(std::string(to_string(protocol)) + " needs at least 2 domains");
  }
  if (b2n && num_classes % 2 != 0) {
    throw ConfigError("base-to-new needs an even class count, got " + std::to_string(num_classes));
  }

  ExperimentSplit split;
  split.protocol = protocol;
  split.shots = shots;
  std::vector<std::size_t> others;
  for (std::size_t d = 0; d < num_domains; ++d) {
    if (d != anchor) others.push_back(d);
  }
  switch (protocol) {
    case Protocol::kMultiDg:
      split.sources = others;
      split.targets = {anchor};
      break;
    case Protocol::kSingleDg:
    case Protocol::kBaseToNewCrossDomain:
      split.sources = {anchor};
      split.targets = others;
      break;
    case Protocol::kBaseToNewInDomain:
      split.sources = {anchor};
      split.targets = {anchor};
      break;
  }

  std::vector<std::size_t> classes(num_classes);
  std::iota(classes.begin(), classes.end(), std::size_t{0});
  if (b2n) {
    if (shuffle_classes) {
      Rng rng(derive_seed({seed, 0x62326e}));
      rng.shuffle(classes);
    }
    const std::size_t half = num_classes / 2;
    split.train_classes.assign(classes.begin(), classes.begin() + static_cast<long>(half));
    split.test_classes.assign(classes.begin() + static_cast<long>(half), classes.end());
    std::sort(split.train_classes.begin(), split.train_classes.end());
    std::sort(split.test_classes.begin(), split.test_classes.end());
  } else {
    split.train_classes = classes;
    split.test_classes = classes;
  }
  split.validate();
  return split;
}

}  // namespace stylip
