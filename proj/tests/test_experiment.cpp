#include <gtest/gtest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "json.hpp"
#include "stylip/container.hpp"
#include "stylip/errors.hpp"
#include "stylip/experiment.hpp"

namespace stylip {
namespace {

namespace fs = std::filesystem;

struct ScratchDir {
  fs::path path;
  explicit ScratchDir(const std::string& name)
      : path(fs::temp_directory_path() / ("stylip-test-" + name + "-" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
};

// One domain, one seed, one epoch: a run in well under a second.
ExperimentConfig tiny(const fs::path& out) {
  return parse_config_text(
      "protocol = base-to-new-in-domain\n"
      "domains = checker-gray\n"
      "seeds = 3\n"
      "epochs = 1\n"
      "shots = 2\n"
      "test_per_class = 2\n"
      "baselines = false\n"
      "output = " +
      out.string() + "\n");
}

std::vector<std::string> listing(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

TEST(ParseConfig, EmptyFileGivesDefaults) {
  const auto c = parse_config_text("");
  EXPECT_EQ(c, ExperimentConfig{});
  EXPECT_EQ(c.variant.context_length, 4u);
  EXPECT_EQ(c.variant.bottleneck_channels, 3u);
  EXPECT_EQ(c.variant.projector_depth, 1u);
  EXPECT_EQ(c.shots, 16u);
  EXPECT_EQ(c.loss.epochs, 10u);
  EXPECT_EQ(c.loss.batch_size, 8u);
  EXPECT_DOUBLE_EQ(c.loss.lr, 2e-2);
  EXPECT_DOUBLE_EQ(c.loss.beta1, 0.9);
  EXPECT_DOUBLE_EQ(c.loss.beta2, 0.999);
  EXPECT_DOUBLE_EQ(c.loss.tau, 0.07);
  EXPECT_EQ(c.preset, Preset::kStylip);
}

TEST(ParseConfig, ContextSixteenOnTwelveStages) {
  const auto c = parse_config_text("encoder = vit-style\nM = 16\n");
  EXPECT_EQ(c.encoder_config().stage_count(), 12u);
  EXPECT_EQ(c.encoder_config().context_length, 16u);
  const auto sources = token_sources(12, 16);
  EXPECT_EQ(sources[15], std::vector<std::size_t>{11});
}

TEST(ParseConfig, ZeroBottleneckNamesTheLine) {
  try {
    parse_config_text("# header\nM = 4\nC_hat = 0\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("C_hat"), std::string::npos) << e.what();
  }
}

TEST(ParseConfig, RejectsUnknownKeysMalformedLinesAndDuplicates) {
  EXPECT_THROW(parse_config_text("learning_rate = 0.1\n"), ConfigError);
  EXPECT_THROW(parse_config_text("just words\n"), ConfigError);
  EXPECT_THROW(parse_config_text("tau = 0.1\ntau = 0.2\n"), ConfigError);
  EXPECT_THROW(parse_config_text("tau = warm\n"), ConfigError);
  EXPECT_THROW(parse_config_text("protocol = base-to-new-in-domain\nclasses = 7\n"), ConfigError);
  EXPECT_THROW(parse_config_text("domains = nowhere\n"), ConfigError);
  EXPECT_THROW(parse_config_text("M = 3\n"), ConfigError);
  EXPECT_THROW(parse_config(fs::path("/nonexistent/stylip.cfg")), ConfigError);
}

TEST(ParseConfig, ExplicitKeysOverrideThePresetAnywhere) {
  const auto c = parse_config_text("fusion = max-pool\npreset = STYLIP-STAR\n");
  EXPECT_EQ(c.variant.content_branch, ContentBranch::kDeepestOnly);
  EXPECT_EQ(c.variant.fusion, FusionMode::kMaxPool);
  EXPECT_EQ(c.main_label(), "custom");
  EXPECT_EQ(parse_config_text("preset = STYLIP-STAR\n").main_label(), "STYLIP-STAR");
}

TEST(ParseConfig, EchoRoundTrips) {
  auto c = parse_config_text(
      "protocol = single-dg\npreset = STYLIP-CON\nstats_use = sigma-only\ndepth = 3\nseeds = 4, 9\n"
      "domains = flat-warm, speckle-dark\ncompare = STYLIP-STAR, STYLIP-STY\nworkers = 2\nlr = 0.005\n");
  EXPECT_EQ(parse_config_text(c.to_text()), c);
  EXPECT_EQ(parse_config_text(ExperimentConfig{}.to_text()), ExperimentConfig{});
}

TEST(ParseConfig, SeedOffset) {
  auto c = parse_config_text("seeds = 1, 2\n");
  apply_seed_offset(c, "10");
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{11, 12}));
  apply_seed_offset(c, "-11");
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{0, 1}));
  EXPECT_THROW(apply_seed_offset(c, "-1"), ConfigError);
  EXPECT_THROW(apply_seed_offset(c, "two"), ConfigError);
}

TEST(ParseConfig, ModelsListMainComparedThenBaselines) {
  const auto c = parse_config_text("compare = STYLIP-STAR\n");
  const auto models = c.models();
  ASSERT_EQ(models.size(), 4u);
  EXPECT_EQ(models[0].name, "STYLIP");
  EXPECT_EQ(models[1].name, "STYLIP-STAR");
  EXPECT_EQ(models[2].name, "zero-prompt");
  EXPECT_FALSE(models[3].train);
}

TEST(RunExperiment, DryRunWritesNothing) {
  ScratchDir dir("dry");
  const auto c = tiny(dir.path / "out");
  std::ostringstream out, err;
  EXPECT_EQ(run_experiment(c, RunOptions{true}, out, err), 0);
  EXPECT_FALSE(fs::exists(dir.path / "out"));
  EXPECT_NE(out.str().find("fold=checker-gray variant=STYLIP seed=3"), std::string::npos) << out.str();
}

TEST(RunExperiment, WritesEveryArtifactDeterministically) {
  ScratchDir dir("run");
  auto c = tiny(dir.path / "a");
  std::ostringstream out, err;
  ASSERT_EQ(run_experiment(c, {}, out, err), 0) << err.str();
  EXPECT_EQ(listing(c.output), (std::vector<std::string>{"checkpoints", "config.txt", "encoders.bin", "logs",
                                                         "metrics.csv", "metrics.json"}));
  EXPECT_TRUE(fs::exists(fs::path(c.output) / "checkpoints" / "checker-gray__STYLIP__seed3.bin"));
  EXPECT_TRUE(fs::exists(fs::path(c.output) / "logs" / "checker-gray__STYLIP__seed3.csv"));
  EXPECT_EQ(parse_config_text(read_file(fs::path(c.output) / "config.txt")), c);
  const auto j = nlohmann::json::parse(read_file(fs::path(c.output) / "metrics.json"));
  EXPECT_EQ(j["rows"].size(), 3u);
  EXPECT_EQ(j["config"]["protocol"], "base-to-new-in-domain");

  const std::string first = read_file(fs::path(c.output) / "metrics.csv");
  ASSERT_EQ(run_experiment(c, {}, out, err), 0) << err.str();  // replaces the earlier result
  EXPECT_EQ(read_file(fs::path(c.output) / "metrics.csv"), first);
  c.workers = 3;
  c.output = (dir.path / "b").string();
  ASSERT_EQ(run_experiment(c, {}, out, err), 0) << err.str();
  EXPECT_EQ(read_file(fs::path(c.output) / "metrics.csv"), first);
}

TEST(RunExperiment, DatasetDump) {
  ScratchDir dir("dump");
  auto c = tiny(dir.path / "out");
  c.dump_dataset = true;
  std::ostringstream out, err;
  ASSERT_EQ(run_experiment(c, {}, out, err), 0) << err.str();
  const fs::path data = fs::path(c.output) / "dataset";
  const auto container = decode_container(read_file(data / "checker-gray.bin"));
  EXPECT_EQ(container.kind, ContainerKind::kDataset);
  EXPECT_EQ(container.find("images").shape(), (Shape{16, 32, 32, 3}));
  const auto manifest = nlohmann::json::parse(read_file(data / "manifest.json"));
  EXPECT_TRUE(manifest.contains("domains"));
}

TEST(RunExperiment, FailureLeavesOnlyTheMarker) {
  ScratchDir dir("fail");
  auto c = tiny(dir.path / "out");
  c.loss.lr = 1e300;  // valid, but the first update overflows
  c.loss.epochs = 3;
  std::ostringstream out, err;
  EXPECT_EQ(run_experiment(c, {}, out, err), 1);
  EXPECT_EQ(listing(c.output), std::vector<std::string>{"FAILED"});
  EXPECT_NE(err.str().find("non-finite"), std::string::npos) << err.str();
  EXPECT_EQ(listing(dir.path), std::vector<std::string>{"out"});  // no staging leftovers
}

TEST(RunExperiment, RefusesForeignDirectories) {
  ScratchDir dir("foreign");
  fs::create_directories(dir.path / "out");
  write_file_atomic(dir.path / "out" / "notes.txt", "keep me");
  std::ostringstream out, err;
  EXPECT_EQ(run_experiment(tiny(dir.path / "out"), {}, out, err), 2);
  EXPECT_TRUE(fs::exists(dir.path / "out" / "notes.txt"));
}

TEST(RunSweep, OneSubReportPerValue) {
  ScratchDir dir("sweep");
  auto c = tiny(dir.path / "shots");
  std::ostringstream out, err;
  const std::vector<std::string> shots{"1", "5", "10", "16"};
  ASSERT_EQ(run_sweep(c, "shots", shots, {}, out, err), 0) << err.str();
  EXPECT_EQ(listing(c.output),
            (std::vector<std::string>{"shots=1", "shots=10", "shots=16", "shots=5", "sweep.csv"}));
  const std::string csv = read_file(fs::path(c.output) / "sweep.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "# columns: axis,axis_value,protocol,fold,variant,seed,metric,value");

  c.output = (dir.path / "chat").string();
  const std::vector<std::string> widths{"2", "3", "4", "16"};
  ASSERT_EQ(run_sweep(c, "C_hat", widths, {}, out, err), 0) << err.str();
  EXPECT_EQ(listing(c.output).size(), 5u);
}

TEST(RunSweep, SingleValueMatchesPlainRun) {
  ScratchDir dir("single");
  auto c = tiny(dir.path / "sweep");
  std::ostringstream out, err;
  const std::vector<std::string> one{"2"};
  ASSERT_EQ(run_sweep(c, "depth", one, {}, out, err), 0) << err.str();
  c.variant.projector_depth = 2;
  c.output = (dir.path / "plain").string();
  ASSERT_EQ(run_experiment(c, {}, out, err), 0) << err.str();
  EXPECT_EQ(read_file(dir.path / "sweep" / "depth=2" / "metrics.csv"), read_file(dir.path / "plain" / "metrics.csv"));
}

TEST(RunSweep, InactiveAxesAreRejected) {
  auto c = parse_config_text("preset = STYLIP-STY\n");
  EXPECT_THROW(check_sweep_axis(c, "fusion"), ConfigError);
  EXPECT_THROW(check_sweep_axis(c, "C_hat"), ConfigError);
  EXPECT_THROW(check_sweep_axis(c, "epochs"), ConfigError);
  EXPECT_NO_THROW(check_sweep_axis(c, "M"));
  EXPECT_THROW(check_sweep_axis(parse_config_text("preset = STYLIP-CON\n"), "stats_use"), ConfigError);
  std::ostringstream out, err;
  const std::vector<std::string> bad{"3"};
  EXPECT_EQ(run_sweep(parse_config_text(""), "M", bad, {}, out, err), 2);
}

}  // namespace
}  // namespace stylip
