#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stylip/tensor.hpp"

namespace stylip {

inline constexpr std::size_t kImageSize = 32;

inline constexpr std::array<std::string_view, 8> kShapeNames{
    "circle", "square", "triangle", "cross", "ring", "bar", "l-shape", "diamond"};

enum class Texture { kFlat, kStripes, kChecker, kSpeckle };

std::string_view to_string(Texture t);

struct Rgb {
  double r = 0.0, g = 0.0, b = 0.0;
};

/// Pixel styling of one synthetic domain. Never touches the shape mask.
struct DomainSpec {
  std::size_t id = 0;
  std::string name;
  Rgb foreground;
  Rgb background;
  Texture texture = Texture::kFlat;
  double frequency = 0.0;   // stripe/checker period in pixels, or speckle density
  double texture_strength = 0.0;
  double noise_sigma = 0.0;
  double contrast = 1.0;
  double brightness = 0.0;
};

/// flat-warm, striped-cool, checker-gray, speckle-dark.
std::vector<DomainSpec> default_domains();

/// Binary W x W coverage mask of a jittered shape; a pure function of (class, seed).
struct ShapeMask {
  std::size_t size = kImageSize;
  std::vector<std::uint8_t> bits;  // row-major over (x, y)

  double fill_fraction() const;
  friend bool operator==(const ShapeMask&, const ShapeMask&) = default;
};

ShapeMask render_mask(std::size_t class_id, std::uint64_t seed);

struct Sample {
  Tensor image;  // 32 x 32 x 3, values in [0, 1]
  ShapeMask mask;
  std::size_t label = 0;
  std::size_t domain = 0;
  std::uint64_t seed = 0;
};

Sample render_sample(std::size_t class_id, const DomainSpec& domain, std::uint64_t seed);

struct DomainDataset {
  std::size_t domain = 0;
  std::vector<Sample> samples;

  std::vector<std::size_t> per_class_counts(std::size_t num_classes) const;
};

/// n_per_class samples for every class; sample k of class c uses the seed
/// derive_seed({seed, c, k}).
DomainDataset generate_dataset(const DomainSpec& domain, std::span<const std::size_t> classes,
                               std::size_t n_per_class, std::uint64_t seed);

// ---------------------------------------------------------------------------

enum class Protocol { kMultiDg, kSingleDg, kBaseToNewInDomain, kBaseToNewCrossDomain };

std::string_view to_string(Protocol p);
Protocol parse_protocol(std::string_view s);
bool is_base_to_new(Protocol p);

struct ExperimentSplit {
  Protocol protocol = Protocol::kMultiDg;
  std::vector<std::size_t> sources;
  std::vector<std::size_t> targets;
  std::vector<std::size_t> train_classes;  // Y
  std::vector<std::size_t> test_classes;   // Y^t
  std::size_t shots = 16;

  /// Closed-set splits need Y == Y^t, base-to-new splits Y and Y^t disjoint.
  void validate() const;
};

/// `anchor` is the held-out target (multi-dg) or the single source domain
/// (single-dg and both base-to-new protocols). With `shuffle_classes` the
/// base/new halves come from a seeded permutation instead of id order.
ExperimentSplit make_split(Protocol protocol, std::size_t num_domains, std::size_t num_classes,
                           std::size_t anchor, std::size_t shots, std::uint64_t seed = 0,
                           bool shuffle_classes = false);

}  // namespace stylip
