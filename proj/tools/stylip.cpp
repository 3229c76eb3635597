#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "self_check.hpp"
#include "stylip/errors.hpp"
#include "stylip/experiment.hpp"

namespace {

// Applies the command-line overrides shared by `run` and `sweep`.
stylip::ExperimentConfig load(const std::string& path, const std::optional<std::string>& out_dir,
                              const std::optional<std::size_t>& workers) {
  auto config = stylip::parse_config(path);
  if (out_dir) config.output = *out_dir;
  if (workers) config.workers = *workers;
  if (const char* offset = std::getenv("STYLIP_SEED_OFFSET")) stylip::apply_seed_offset(config, offset);
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Style-conditioned prompt learning on synthetic domains"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> workers;
  bool dry_run = false;
  std::string axis;
  std::vector<std::string> values;

  auto* run = app.add_subcommand("run", "Run one experiment from a config file");
  run->add_option("config", config_path, "Flat key = value config file")->required();
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  run->add_option("--workers", workers, "Parallel folds (overrides the config)")->check(CLI::PositiveNumber);
  run->add_flag("--dry-run", dry_run, "Validate and print the fold matrix only");

  auto* sweep = app.add_subcommand("sweep", "Run one experiment per value of an ablation axis");
  sweep->add_option("config", config_path, "Flat key = value config file")->required();
  sweep->add_option("--axis", axis, "M, C_hat, shots, depth, fusion or stats_use")->required();
  sweep->add_option("--values", values, "Comma-separated axis values")->required()->delimiter(',');
  sweep->add_option("--out", out_dir, "Output directory (overrides the config)");
  sweep->add_option("--workers", workers, "Parallel folds (overrides the config)")->check(CLI::PositiveNumber);
  sweep->add_flag("--dry-run", dry_run, "Validate and print the fold matrices only");

  auto* check = app.add_subcommand("check", "Run the gradient and invariant self-tests");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) return stylip::run_self_check(std::cout) ? 0 : 1;
    const auto config = load(config_path, out_dir, workers);
    stylip::RunOptions options{dry_run};
    if (run->parsed()) return stylip::run_experiment(config, options, std::cout, std::cerr);
    return stylip::run_sweep(config, axis, values, options, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
