#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stylip/encoders.hpp"
#include "stylip/prompt_pipeline.hpp"
#include "stylip/protocols.hpp"
#include "stylip/synthetic_data.hpp"
#include "stylip/training.hpp"

namespace stylip {

/// Everything one `stylip run` needs, as read from a flat `key = value` file.
///
/// The preset fixes the component switches; the explicit variant keys
/// (style_source, content_branch, stats_use, bottleneck, fusion, M, C_hat,
/// depth) override it regardless of their position in the file.
struct ExperimentConfig {
  Protocol protocol = Protocol::kMultiDg;
  Preset preset = Preset::kStylip;
  VariantConfig variant = VariantConfig::preset(Preset::kStylip);
  std::string encoder = "default";  // "default" (4 stages) or "vit-style" (12 stages)
  std::uint64_t encoder_seed = 0;
  LossConfig loss;
  std::size_t shots = 16;
  std::size_t test_per_class = 32;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<std::string> domains;  // empty selects every default domain
  std::size_t classes = 8;
  std::vector<Preset> compare;  // extra presets trained alongside the main variant
  bool baselines = true;
  std::uint64_t data_seed = 0;
  bool shuffle_classes = false;
  std::size_t workers = 1;
  std::string output = "runs/experiment";
  bool dump_dataset = false;

  /// Applies one key; throws ConfigError for unknown keys and bad values.
  void set(std::string_view key, std::string_view value);

  /// First violated invariant as (key, message), if any.
  std::optional<std::pair<std::string, std::string>> violation() const;
  void validate() const;

  EncoderConfig encoder_config() const;
  std::vector<DomainSpec> selected_domains() const;
  /// Main variant, compared presets, then baselines when enabled.
  std::vector<ModelSpec> models() const;
  std::string main_label() const;
  ProtocolConfig protocol_config() const;

  /// Every key in a fixed order; parsing it back yields an equal config.
  std::string to_text() const;
  std::map<std::string, std::string> to_map() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Keys accepted by ExperimentConfig::set, in echo order.
const std::vector<std::string_view>& config_keys();

ExperimentConfig parse_config_text(std::string_view text);
/// Missing file, malformed line, unknown key or invariant violation all throw
/// ConfigError naming the offending line where there is one.
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Adds a signed integer offset (the STYLIP_SEED_OFFSET value) to every seed.
void apply_seed_offset(ExperimentConfig& config, std::string_view offset);

struct RunOptions {
  bool dry_run = false;
};

/// Writes metrics.csv, metrics.json, config.txt, encoders.bin, checkpoints/
/// and logs/ (and dataset/ when requested) into config.output via a temporary
/// sibling directory. On failure the output directory holds only FAILED.
/// Returns the process exit status; diagnostics go to `err`.
int run_experiment(const ExperimentConfig& config, const RunOptions& options, std::ostream& out,
                   std::ostream& err);

/// Sweep axes: M, C_hat, shots, depth, fusion, stats_use.
const std::vector<std::string_view>& sweep_axes();

/// Throws ConfigError when `axis` is unknown or inactive for the variant.
void check_sweep_axis(const ExperimentConfig& config, std::string_view axis);

/// One sub-experiment per value under <output>/<axis>=<value>/, plus a
/// consolidated sweep.csv with the axis columns prepended.
int run_sweep(const ExperimentConfig& config, std::string_view axis, std::span<const std::string> values,
              const RunOptions& options, std::ostream& out, std::ostream& err);

/// The rendered test images of every selected domain as dataset containers
/// plus a JSON manifest, written into `dir`.
void dump_dataset(const ExperimentConfig& config, const std::filesystem::path& dir);

/// The planned (fold, variant, seed) matrix, one line per job.
std::string fold_matrix(const ExperimentConfig& config);

}  // namespace stylip
