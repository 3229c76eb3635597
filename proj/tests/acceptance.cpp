// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stylip/experiment.hpp"
#include "stylip/key_value.hpp"
#include "stylip/ops.hpp"

namespace fs = std::filesystem;
using namespace stylip;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

Tensor uniform_tensor(Shape shape, std::mt19937_64& gen, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(gen);
  return t;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("stylip_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::size_t> iota_labels(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// Rows of a metrics.csv as (fold, variant, seed, metric) -> value.
struct CsvRow {
  std::string protocol, fold, variant, metric;
  std::uint64_t seed = 0;
  double value = 0.0;
};

std::vector<CsvRow> read_metrics(const fs::path& file) {
  std::ifstream in(file);
  std::string line;
  std::vector<CsvRow> rows;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6) continue;
    rows.push_back({f[0], f[1], f[2], f[4], std::stoull(f[3]), std::strtod(f[5].c_str(), nullptr)});
  }
  return rows;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

VariantConfig with_preset(Preset p) { return VariantConfig::preset(p); }

// Central differences of the batch loss, computed here rather than through
// the library's own checker, against the tape gradients.
double worst_loss_gradient_error(StylipModel& model, const std::vector<EncodedSample>& batch,
                                 const std::vector<std::size_t>& labels, double h, std::size_t max_coords,
                                 std::mt19937_64& gen, std::size_t& checked) {
  std::vector<const EncodedSample*> ptrs;
  for (const auto& s : batch) ptrs.push_back(&s);
  Tape tape;
  Binding b = model.pipeline().bind(tape, true);
  tape.backward(contrastive_loss(model, b, ptrs, labels, 0.07));
  const auto grads = b.gradients();

  double worst = 0.0;
  auto& items = model.pipeline().parameters().items();
  for (std::size_t k = 0; k < items.size(); ++k) {
    Tensor& p = items[k].value;
    std::vector<std::size_t> coords = iota_labels(p.size());
    if (max_coords && coords.size() > max_coords) {
      std::shuffle(coords.begin(), coords.end(), gen);
      coords.resize(max_coords);
    }
    for (auto i : coords) {
      const double orig = p[i];
      p[i] = orig + h;
      const double up = contrastive_loss(model, batch, labels, 0.07);
      p[i] = orig - h;
      const double down = contrastive_loss(model, batch, labels, 0.07);
      p[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = grads[k][i];
      worst = std::max(worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6}));
      ++checked;
    }
  }
  return worst;
}

EncoderConfig small_encoder() {
  EncoderConfig c;
  c.image_size = 8;
  c.stage_widths = {2, 3};
  c.embed_dim = 6;
  c.token_dim = 6;
  c.context_length = 2;
  c.num_classes = 3;
  return c;
}

Outcome criterion_gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(1);
  double worst = 0.0;
  std::size_t checked = 0;

  // Default scale: every preset, a seeded 2-sample batch of rendered images.
  const auto enc = build_frozen(0, EncoderConfig{});
  const auto domains = default_domains();
  std::vector<EncodedSample> batch;
  for (std::size_t k = 0; k < 2; ++k) {
    const auto s = render_sample(k, domains[k], 100 + k);
    batch.push_back({enc.vision.forward(s.image), s.label, s.domain});
  }
  const auto labels = iota_labels(8);
  for (auto p : {Preset::kStylip, Preset::kStylipCon, Preset::kStylipSty, Preset::kStylipStar}) {
    StylipModel model(enc, PromptPipeline(enc.config, with_preset(p), 5));
    worst = std::max(worst, worst_loss_gradient_error(model, batch, labels, 1e-4, 128, gen, checked));
  }

  // Small scale: every scalar of every variant family.
  std::vector<VariantConfig> variants;
  for (auto p : {Preset::kStylip, Preset::kStylipCon, Preset::kStylipSty, Preset::kStylipStar}) {
    variants.push_back(with_preset(p));
  }
  for (auto use : {StatsUse::kMuOnly, StatsUse::kSigmaOnly}) {
    for (auto bn : {BottleneckMode::kGlobalAvgPool, BottleneckMode::kFlattenOnly}) {
      for (auto fu : {FusionMode::kMaxPool, FusionMode::kAvgPool, FusionMode::kLearnable}) {
        VariantConfig v = with_preset(Preset::kStylip);
        v.stats_use = use;
        v.bottleneck = bn;
        v.fusion = fu;
        v.projector_depth = 1 + variants.size() % 3;
        variants.push_back(v);
      }
    }
  }
  const auto small = build_frozen(3, small_encoder());
  for (std::size_t i = 0; i < variants.size(); ++i) {
    VariantConfig v = variants[i];
    v.context_length = 2;
    v.bottleneck_channels = 2;
    std::vector<EncodedSample> b;
    for (std::size_t k = 0; k < 2; ++k) {
      b.push_back({small.vision.forward(uniform_tensor({8, 8, 3}, gen, 0.0, 1.0)), k, 0});
    }
    StylipModel model(small, PromptPipeline(small.config, v, 40 + i));
    worst = std::max(worst, worst_loss_gradient_error(model, b, iota_labels(3), 1e-4, 0, gen, checked));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-3 && secs < 60.0, std::to_string(checked) + " coordinates, worst relative error " +
                                            fmt(worst) + ", " + fmt(secs, 3) + " s"};
}

Outcome criterion_frozen_bytes() {
  const auto enc = build_frozen(0, EncoderConfig{});
  const std::string before = enc.serialize();
  const auto domains = default_domains();
  const auto split = make_split(Protocol::kMultiDg, domains.size(), 8, 3, 16);
  LossConfig loss;
  loss.epochs = 10;
  const auto trained = train(enc, split, domains, with_preset(Preset::kStylip), loss, 0);
  const std::string after = enc.serialize();
  const std::string fresh = build_frozen(0, EncoderConfig{}).serialize();
  const bool ok = before == after && after == fresh && trained.log.size() == 10;
  return {ok, std::to_string(before.size()) + " bytes, unchanged after " + std::to_string(trained.log.size()) +
                  " epochs and equal to a fresh build"};
}

Outcome criterion_probabilities() {
  const auto enc = build_frozen(0, EncoderConfig{});
  const auto domains = default_domains();
  LossConfig loss;
  loss.epochs = 2;
  const auto split = make_split(Protocol::kMultiDg, domains.size(), 8, 0, 2);
  const auto trained = train(enc, split, domains, with_preset(Preset::kStylip), loss, 0);
  const StylipModel untrained(enc, PromptPipeline(enc.config, with_preset(Preset::kStylipStar), 9));

  std::mt19937_64 gen(3);
  double worst = 0.0, smallest = 1.0;
  for (int i = 0; i < 100; ++i) {
    std::vector<std::size_t> classes = iota_labels(8);
    std::shuffle(classes.begin(), classes.end(), gen);
    classes.resize(1 + gen() % 8);
    const auto s = render_sample(gen() % 8, domains[gen() % domains.size()], gen());
    const auto x = enc.vision.forward(s.image);
    const auto p = class_probabilities(i % 2 ? trained.model : untrained, x, classes, 0.07);
    double sum = 0.0;
    for (double q : p.data()) {
      sum += q;
      smallest = std::min(smallest, q);
    }
    worst = std::max(worst, std::abs(sum - 1.0));
    if (p.size() != classes.size()) return {false, "wrong output length"};
  }
  return {worst <= 1e-6 && smallest > 0.0, "worst |sum - 1| " + fmt(worst) + ", smallest entry " + fmt(smallest)};
}

Outcome criterion_style_laws() {
  std::mt19937_64 gen(4);
  bool exact = true, nonneg = true;
  double worst_scale = 0.0, worst_const = 0.0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t w = 1 + gen() % 8, h = 1 + gen() % 8, c = 1 + gen() % 6;
    const Tensor f = uniform_tensor({w, h, c}, gen, -3.0, 3.0);
    const auto s = style_stats(f);

    std::vector<std::size_t> perm = iota_labels(w * h);
    std::shuffle(perm.begin(), perm.end(), gen);
    Tensor g({w, h, c});
    for (std::size_t p = 0; p < w * h; ++p)
      for (std::size_t ch = 0; ch < c; ++ch) g[p * c + ch] = f[perm[p] * c + ch];
    const auto sg = style_stats(g);
    for (std::size_t ch = 0; ch < c; ++ch) {
      exact = exact && sg.mu[ch] == s.mu[ch] && sg.sigma[ch] == s.sigma[ch];
      nonneg = nonneg && s.sigma[ch] >= 0.0;
    }

    const double a = std::uniform_real_distribution<double>(-4.0, 4.0)(gen);
    Tensor scaled = f;
    for (double& v : scaled.data()) v *= a;
    const auto ss = style_stats(scaled);
    for (std::size_t ch = 0; ch < c; ++ch) {
      // sigma(a x) = sqrt(a^2 (sigma(x)^2 - eps) + eps).
      const double expected = std::sqrt(a * a * (s.sigma[ch] * s.sigma[ch] - kVarianceEpsilon) + kVarianceEpsilon);
      worst_scale = std::max({worst_scale, std::abs(ss.mu[ch] - a * s.mu[ch]), std::abs(ss.sigma[ch] - expected)});
    }

    const Tensor flat({w, h, c}, std::uniform_real_distribution<double>(-5.0, 5.0)(gen));
    const auto sf = style_stats(flat);
    for (double v : sf.sigma.data()) {
      worst_const = std::max(worst_const, std::abs(v - std::sqrt(kVarianceEpsilon)));
    }
  }
  return {exact && nonneg && worst_scale <= 1e-9 && worst_const <= 1e-12,
          std::string("permutation ") + (exact ? "exact" : "inexact") + ", scaling deviation " + fmt(worst_scale) +
              ", constant-map deviation " + fmt(worst_const)};
}

Outcome criterion_harmonic_mean() {
  const double a = harmonic_mean(82.69, 63.22), b = harmonic_mean(80.47, 71.69);
  return {std::abs(a - 71.66) <= 0.01 && std::abs(b - 75.83) <= 0.01,
          "HM(82.69, 63.22) = " + fmt(a, 6) + ", HM(80.47, 71.69) = " + fmt(b, 6)};
}

// Averages stage vectors exactly as the grouping rule describes, then
// compares with the library mapping value for value.
Outcome criterion_token_mapping() {
  std::mt19937_64 gen(6);
  auto stats_for = [&](std::size_t layers, std::size_t dim, Tape& tape) {
    std::vector<Var> v;
    for (std::size_t l = 0; l < layers; ++l) v.push_back(tape.constant(uniform_tensor({dim}, gen, -1.0, 1.0)));
    return v;
  };
  double worst = 0.0;
  {
    Tape tape;
    const auto stats = stats_for(4, 5, tape);
    const auto out = map_stats_to_token_inputs(stats, 4);
    for (std::size_t m = 0; m < 4; ++m)
      for (std::size_t i = 0; i < 5; ++i) worst = std::max(worst, std::abs(out[m].value()[i] - stats[m].value()[i]));
  }
  {
    Tape tape;
    const auto stats = stats_for(12, 5, tape);
    const auto out = map_stats_to_token_inputs(stats, 4);
    for (std::size_t m = 0; m < 4; ++m) {
      for (std::size_t i = 0; i < 5; ++i) {
        double mean = 0.0;
        for (std::size_t l = 3 * m; l < 3 * m + 3; ++l) mean += stats[l].value()[i];
        worst = std::max(worst, std::abs(out[m].value()[i] - mean / 3.0));
      }
    }
  }
  bool tail = true;
  {
    Tape tape;
    const auto stats = stats_for(12, 5, tape);
    const auto out = map_stats_to_token_inputs(stats, 16);
    tail = out.size() == 16;
    for (std::size_t m = 0; m < 12 && tail; ++m)
      for (std::size_t i = 0; i < 5; ++i) tail = tail && out[m].value()[i] == stats[m].value()[i];
    // 1-based tokens 13..16 repeat layers 9..12.
    for (std::size_t m = 12; m < 16 && tail; ++m)
      for (std::size_t i = 0; i < 5; ++i) tail = tail && out[m].value()[i] == stats[m - 4].value()[i];
  }
  return {worst <= 1e-12 && tail, "identity and group-mean deviation " + fmt(worst) +
                                      (tail ? ", tokens 13-16 equal layers 9-12" : ", replication mismatch")};
}

struct DefaultRun {
  bool ok = false;
  std::string error;
  double seconds = 0.0;
  fs::path dir;
};

DefaultRun run_default_task() {
  DefaultRun r;
  r.dir = scratch("default") / "run";
  ExperimentConfig cfg;
  cfg.output = r.dir.string();
  std::ostringstream out, err;
  const auto t0 = Clock::now();
  const int status = run_experiment(cfg, {}, out, err);
  r.seconds = seconds_since(t0);
  r.ok = status == 0;
  r.error = err.str();
  return r;
}

Outcome criterion_convergence(const DefaultRun& run) {
  if (!run.ok) return {false, "default run failed: " + run.error};
  std::size_t logs = 0, good = 0;
  std::set<std::string> failing_seeds;
  std::set<std::string> seeds;
  double lowest_acc = 1.0;
  for (const auto& entry : fs::directory_iterator(run.dir / "logs")) {
    const std::string name = entry.path().filename().string();
    if (name.find("__STYLIP__seed") == std::string::npos) continue;
    const std::string seed = name.substr(name.find("__seed") + 6);
    seeds.insert(seed);
    ++logs;
    std::ifstream in(entry.path());
    std::string line;
    std::getline(in, line);
    std::vector<double> loss, acc;
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string e, l, a;
      std::getline(ss, e, ',');
      std::getline(ss, l, ',');
      std::getline(ss, a, ',');
      loss.push_back(std::strtod(l.c_str(), nullptr));
      acc.push_back(std::strtod(a.c_str(), nullptr));
    }
    bool ok = loss.size() >= 5 && !acc.empty() && acc.back() >= 0.95;
    for (std::size_t i = 1; i < 5 && ok; ++i) ok = loss[i] < loss[i - 1];
    if (!acc.empty()) lowest_acc = std::min(lowest_acc, acc.back());
    if (ok) {
      ++good;
    } else {
      failing_seeds.insert(seed);
    }
  }
  const std::size_t seeds_ok = seeds.size() - failing_seeds.size();
  return {logs > 0 && failing_seeds.empty() && seeds.size() == 5 && run.seconds < 600.0,
          std::to_string(seeds_ok) + "/" + std::to_string(seeds.size()) + " seeds (" + std::to_string(good) + "/" +
              std::to_string(logs) + " folds), lowest final train accuracy " + fmt(lowest_acc) + ", " +
              fmt(run.seconds, 4) + " s"};
}

double mean_target_accuracy(const std::vector<CsvRow>& rows, const std::string& variant) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.variant == variant && r.metric == "acc") {
      sum += r.value;
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : std::nan("");
}

Outcome criterion_ablation_order(const DefaultRun& run) {
  if (!run.ok) return {false, "default run failed: " + run.error};
  const auto rows = read_metrics(run.dir / "metrics.csv");
  const double stylip = mean_target_accuracy(rows, "STYLIP");
  const double random_prompt = mean_target_accuracy(rows, "frozen-random-prompt");

  const ExperimentConfig cfg;
  const auto enc = build_frozen(cfg.encoder_seed, cfg.encoder_config());
  const std::vector<ModelSpec> models{{"STYLIP-STAR", with_preset(Preset::kStylipStar), true}};
  const auto domains = cfg.selected_domains();
  const auto star = run_multi_source_dg(enc, domains, cfg.classes, models, cfg.seeds, cfg.protocol_config());
  std::vector<CsvRow> star_rows;
  for (const auto& r : star.report.rows) star_rows.push_back({r.protocol, r.fold, r.variant, r.metric, r.seed, r.value});
  const double star_acc = mean_target_accuracy(star_rows, "STYLIP-STAR");

  const bool ok = stylip >= random_prompt + 0.05 && stylip >= star_acc - 0.01;
  return {ok, "STYLIP " + fmt(stylip) + ", STYLIP-STAR " + fmt(star_acc) + ", frozen-random " + fmt(random_prompt)};
}

Outcome criterion_temperature() {
  const auto enc = build_frozen(0, EncoderConfig{});
  const auto domains = default_domains();
  LossConfig loss;
  loss.epochs = 2;
  const auto split = make_split(Protocol::kMultiDg, domains.size(), 8, 1, 2);
  const auto trained = train(enc, split, domains, with_preset(Preset::kStylip), loss, 0);
  std::mt19937_64 gen(9);
  const auto labels = iota_labels(8);
  std::size_t same = 0;
  for (int i = 0; i < 200; ++i) {
    const auto s = render_sample(gen() % 8, domains[gen() % domains.size()], gen());
    const auto x = enc.vision.forward(s.image);
    const auto a = predict(trained.model, x, labels, 0.01);
    same += a == predict(trained.model, x, labels, 0.07) && a == predict(trained.model, x, labels, 1.0);
  }
  return {same == 200, std::to_string(same) + "/200 predictions identical across tau"};
}

Outcome criterion_cli_determinism() {
  const fs::path root = scratch("cli");
  const std::string config =
      "protocol = multi-dg\n"
      "seeds = 0, 1\n"
      "epochs = 2\n"
      "shots = 2\n"
      "test_per_class = 3\n"
      "compare = STYLIP-CON\n";
  {
    std::ofstream(root / "run.cfg") << config;
  }
  std::vector<std::string> csv;
  const std::vector<int> workers{1, 1, 3};
  for (std::size_t i = 0; i < workers.size(); ++i) {
    const fs::path out = root / ("out" + std::to_string(i));
    const std::string cmd = std::string("\"") + STYLIP_CLI + "\" run \"" + (root / "run.cfg").string() +
                            "\" --out \"" + out.string() + "\" --workers " + std::to_string(workers[i]) +
                            " > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "stylip run exited nonzero: " + cmd};
    csv.push_back(slurp(out / "metrics.csv"));
  }
  const bool ok = !csv[0].empty() && csv[0] == csv[1] && csv[1] == csv[2];
  return {ok, std::to_string(csv[0].size()) + "-byte metrics.csv, " + (ok ? "identical" : "different") +
                  " across workers 1, 1, 3"};
}

Outcome criterion_split_soundness() {
  std::size_t checked = 0;
  for (auto protocol : {Protocol::kMultiDg, Protocol::kSingleDg, Protocol::kBaseToNewInDomain,
                        Protocol::kBaseToNewCrossDomain}) {
    const bool closed = protocol == Protocol::kMultiDg || protocol == Protocol::kSingleDg;
    const std::size_t min_domains = protocol == Protocol::kBaseToNewInDomain ? 1 : 2;
    for (std::size_t domains = min_domains; domains <= 6; ++domains) {
      // Base-to-new needs equal halves, so only even class counts are valid there.
      for (std::size_t classes = closed ? 1 : 2; classes <= 12; classes += closed ? 1 : 2) {
        for (std::size_t anchor = 0; anchor < domains; ++anchor) {
          for (bool shuffle : {false, true}) {
            for (std::uint64_t seed : {0, 1, 2}) {
              const auto s = make_split(protocol, domains, classes, anchor, 4, seed, shuffle);
              const std::set<std::size_t> y(s.train_classes.begin(), s.train_classes.end());
              const std::set<std::size_t> yt(s.test_classes.begin(), s.test_classes.end());
              std::vector<std::size_t> both;
              std::set_intersection(y.begin(), y.end(), yt.begin(), yt.end(), std::back_inserter(both));
              const bool ok = closed ? (y == yt && !y.empty()) : (both.empty() && !y.empty() && !yt.empty());
              if (!ok) {
                return {false, std::string(to_string(protocol)) + " split unsound with " + std::to_string(domains) +
                                   " domains, " + std::to_string(classes) + " classes, anchor " +
                                   std::to_string(anchor)};
              }
              ++checked;
            }
          }
        }
      }
    }
  }
  return {true, std::to_string(checked) + " splits checked"};
}

Outcome criterion_fuse_dimension() {
  const auto enc = build_frozen(0, EncoderConfig{});
  const auto x = enc.vision.forward(render_sample(2, default_domains()[0], 1).image);
  std::size_t combos = 0;
  for (auto preset : {Preset::kStylip, Preset::kStylipCon, Preset::kStylipSty, Preset::kStylipStar}) {
    for (auto use : {StatsUse::kMuAndSigma, StatsUse::kMuOnly, StatsUse::kSigmaOnly}) {
      for (auto bn : {BottleneckMode::kConv1x1, BottleneckMode::kGlobalAvgPool, BottleneckMode::kFlattenOnly}) {
        for (auto fu : {FusionMode::kMaxPool, FusionMode::kAvgPool, FusionMode::kLearnable}) {
          for (std::size_t depth = 1; depth <= 3; ++depth) {
            VariantConfig v = with_preset(preset);
            v.stats_use = use;
            v.bottleneck = bn;
            v.fusion = fu;
            v.projector_depth = depth;
            const PromptPipeline pipe(enc.config, v, combos);
            Tape tape;
            Binding b = pipe.bind(tape, false);
            std::vector<Var> maps;
            for (const auto& s : x.stages) maps.push_back(tape.constant(s));
            std::optional<Var> content;
            if (!pipe.content_stages().empty()) content = pipe.content_vector(b, maps);
            const auto tokens = pipe.context_tokens(b, maps);
            std::vector<Tensor> prompt;
            for (const auto& t : tokens) prompt.push_back(t.value());
            prompt.push_back(enc.classes.row(0));
            const Tensor text = enc.text.forward(prompt);
            const Var fused = pipe.fuse(b, content, tape.constant(text));
            if (fused.value().size() != enc.config.embed_dim) {
              return {false, std::string(to_string(preset)) + "/" + std::string(to_string(use)) + "/" +
                                 std::string(to_string(bn)) + "/" + std::string(to_string(fu)) + "/depth " +
                                 std::to_string(depth) + " gives " + std::to_string(fused.value().size())};
            }
            ++combos;
          }
        }
      }
    }
  }
  return {true, std::to_string(combos) + " combinations give d = " + std::to_string(enc.config.embed_dim)};
}

}  // namespace

int main() {
  std::cout << std::unitbuf;
  DefaultRun default_run;
  bool default_done = false;
  auto with_default = [&](Outcome (*fn)(const DefaultRun&)) {
    return [&, fn] {
      if (!default_done) {
        default_run = run_default_task();
        default_done = true;
      }
      return fn(default_run);
    };
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient oracle", criterion_gradients},
      {"frozen encoder bytes", criterion_frozen_bytes},
      {"class probabilities", criterion_probabilities},
      {"style statistics laws", criterion_style_laws},
      {"harmonic mean anchors", criterion_harmonic_mean},
      {"token mapping", criterion_token_mapping},
      {"convergence", with_default(criterion_convergence)},
      {"leave-one-out ordering", with_default(criterion_ablation_order)},
      {"temperature invariance", criterion_temperature},
      {"run determinism", criterion_cli_determinism},
      {"split soundness", criterion_split_soundness},
      {"fusion dimension", criterion_fuse_dimension},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.ok;
    std::cout << (o.ok ? "PASS" : "FAIL") << ' ' << (i + 1) << ' ' << criteria[i].first << ": " << o.detail << '\n';
  }
  return failures == 0 ? 0 : 1;
}
