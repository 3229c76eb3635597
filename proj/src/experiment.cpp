#include "stylip/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "stylip/container.hpp"
#include "stylip/errors.hpp"
#include "stylip/key_value.hpp"

namespace stylip {
namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) s += ", ";
    s += parts[i];
  }
  return s;
}

std::uint64_t parse_u64(const KeyValue& kv) {
  std::uint64_t v = 0;
  const char* b = kv.value.data();
  const char* e = b + kv.value.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || kv.value.empty()) {
    const std::string where = kv.line ? "line " + std::to_string(kv.line) + ": " : std::string();
    throw ConfigError(where + "key '" + kv.key + "' expects a non-negative integer, got '" + kv.value + "'");
  }
  return v;
}

// Rethrows a parse error from an enum or list parser with the line attached.
template <typename F>
auto with_line(const KeyValue& kv, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    if (kv.line == 0) throw;
    throw ConfigError("line " + std::to_string(kv.line) + ": " + e.what());
  }
}

void set_components_from(VariantConfig& v, Preset p) {
  const VariantConfig base = VariantConfig::preset(p);
  v.style_source = base.style_source;
  v.content_branch = base.content_branch;
  v.stats_use = base.stats_use;
  v.bottleneck = base.bottleneck;
  v.fusion = base.fusion;
}

bool same_components(const VariantConfig& a, const VariantConfig& b) {
  return a.style_source == b.style_source && a.content_branch == b.content_branch && a.stats_use == b.stats_use &&
         a.bottleneck == b.bottleneck && a.fusion == b.fusion;
}

void apply(ExperimentConfig& c, const KeyValue& kv) {
  const std::string& k = kv.key;
  const std::string& v = kv.value;
  if (k == "protocol") c.protocol = with_line(kv, [&] { return parse_protocol(v); });
  else if (k == "preset") {
    c.preset = with_line(kv, [&] { return parse_preset(v); });
    set_components_from(c.variant, c.preset);
  } else if (k == "style_source") c.variant.style_source = with_line(kv, [&] { return parse_style_source(v); });
  else if (k == "content_branch") c.variant.content_branch = with_line(kv, [&] { return parse_content_branch(v); });
  else if (k == "stats_use") c.variant.stats_use = with_line(kv, [&] { return parse_stats_use(v); });
  else if (k == "bottleneck") c.variant.bottleneck = with_line(kv, [&] { return parse_bottleneck_mode(v); });
  else if (k == "fusion") c.variant.fusion = with_line(kv, [&] { return parse_fusion_mode(v); });
  else if (k == "M") c.variant.context_length = parse_size(kv);
  else if (k == "C_hat") c.variant.bottleneck_channels = parse_size(kv);
  else if (k == "depth") c.variant.projector_depth = parse_size(kv);
  else if (k == "encoder") c.encoder = v;
  else if (k == "encoder_seed") c.encoder_seed = parse_u64(kv);
  else if (k == "tau") c.loss.tau = parse_double(kv);
  else if (k == "lr") c.loss.lr = parse_double(kv);
  else if (k == "betas") {
    const auto parts = split_list(v);
    if (parts.size() != 2) {
      const std::string where = kv.line ? "line " + std::to_string(kv.line) + ": " : std::string();
      throw ConfigError(where + "key 'betas' expects two values 'beta1, beta2', got '" + v + "'");
    }
    c.loss.beta1 = parse_double({k, parts[0], kv.line});
    c.loss.beta2 = parse_double({k, parts[1], kv.line});
  } else if (k == "batch") c.loss.batch_size = parse_size(kv);
  else if (k == "epochs") c.loss.epochs = parse_size(kv);
  else if (k == "shots") c.shots = parse_size(kv);
  else if (k == "test_per_class") c.test_per_class = parse_size(kv);
  else if (k == "seeds") {
    c.seeds.clear();
    for (const auto& s : split_list(v)) c.seeds.push_back(parse_u64({k, s, kv.line}));
  } else if (k == "domains") {
    c.domains.clear();
    if (v != "all") c.domains = split_list(v);
  } else if (k == "classes") c.classes = parse_size(kv);
  else if (k == "compare") {
    c.compare.clear();
    if (v != "none") {
      for (const auto& s : split_list(v)) c.compare.push_back(with_line(kv, [&] { return parse_preset(s); }));
    }
  } else if (k == "baselines") c.baselines = parse_bool(kv);
  else if (k == "data_seed") c.data_seed = parse_u64(kv);
  else if (k == "shuffle_classes") c.shuffle_classes = parse_bool(kv);
  else if (k == "workers") c.workers = parse_size(kv);
  else if (k == "output") c.output = v;
  else if (k == "dump_dataset") c.dump_dataset = parse_bool(kv);
  else {
    const std::string where = kv.line ? "line " + std::to_string(kv.line) + ": " : std::string();
    throw ConfigError(where + "unknown key '" + k + "'");
  }
}

}  // namespace

const std::vector<std::string_view>& config_keys() {
  static const std::vector<std::string_view> keys{
      "protocol", "preset",  "style_source",   "content_branch", "stats_use", "bottleneck",   "fusion",
      "M",        "C_hat",   "depth",          "encoder",        "encoder_seed", "tau",       "lr",
      "betas",    "batch",   "epochs",         "shots",          "test_per_class", "seeds",   "domains",
      "classes",  "compare", "baselines",      "data_seed",      "shuffle_classes", "workers", "output",
      "dump_dataset"};
  return keys;
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  apply(*this, KeyValue{std::string(key), trim(value), 0});
}

std::optional<std::pair<std::string, std::string>> ExperimentConfig::violation() const {
  using V = std::pair<std::string, std::string>;
  if (variant.context_length == 0) return V{"M", "context length M must be at least 1"};
  if (variant.bottleneck_channels == 0) return V{"C_hat", "bottleneck channels C_hat must be at least 1"};
  if (variant.projector_depth < 1 || variant.projector_depth > 3) {
    return V{"depth", "projector depth must be 1, 2 or 3, got " + std::to_string(variant.projector_depth)};
  }
  if (encoder != "default" && encoder != "vit-style") {
    return V{"encoder", "encoder must be 'default' or 'vit-style', got '" + encoder + "'"};
  }
  try {
    const auto enc = encoder_config();
    token_sources(enc.stage_count(), variant.context_length);
    if (variant.style_source == StyleSource::kMultiScaleStats) {
      std::vector<std::size_t> stat_dims;
      for (auto w : enc.stage_widths) stat_dims.push_back(variant.stats_use == StatsUse::kMuAndSigma ? 2 * w : w);
      token_input_dims(stat_dims, variant.context_length);
    }
  } catch (const Error& e) {
    return V{"M", e.what()};
  }
  if (!(loss.tau > 0.0)) return V{"tau", "temperature must be positive"};
  if (!(loss.lr > 0.0)) return V{"lr", "learning rate must be positive"};
  if (!(loss.beta1 >= 0.0 && loss.beta1 < 1.0 && loss.beta2 >= 0.0 && loss.beta2 < 1.0)) {
    return V{"betas", "betas must lie in [0, 1)"};
  }
  if (loss.batch_size == 0) return V{"batch", "batch size must be at least 1"};
  if (loss.epochs == 0) return V{"epochs", "epochs must be at least 1"};
  if (shots == 0) return V{"shots", "shots must be at least 1"};
  if (test_per_class == 0) return V{"test_per_class", "test_per_class must be at least 1"};
  if (seeds.empty()) return V{"seeds", "at least one seed is required"};
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    return V{"seeds", "seeds must be distinct"};
  }
  const auto all = default_domains();
  std::set<std::string> seen;
  for (const auto& d : domains) {
    if (std::none_of(all.begin(), all.end(), [&](const DomainSpec& s) { return s.name == d; })) {
      std::vector<std::string> names;
      for (const auto& s : all) names.push_back(s.name);
      return V{"domains", "unknown domain '" + d + "' (known: " + join(names) + ")"};
    }
    if (!seen.insert(d).second) return V{"domains", "domain '" + d + "' listed twice"};
  }
  const std::size_t n_domains = domains.empty() ? all.size() : domains.size();
  if (n_domains < 2 && protocol != Protocol::kBaseToNewInDomain) {
    return V{"domains", std::string(to_string(protocol)) + " needs at least 2 domains"};
  }
  if (classes == 0 || classes > kShapeNames.size()) {
    return V{"classes", "classes must lie in [1, " + std::to_string(kShapeNames.size()) + "]"};
  }
  if (is_base_to_new(protocol) && (classes % 2 != 0 || classes < 2)) {
    return V{"classes", "base-to-new needs an even class count, got " + std::to_string(classes)};
  }
  if (workers == 0) return V{"workers", "workers must be at least 1"};
  if (output.empty()) return V{"output", "output directory must not be empty"};
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  if (auto v = violation()) throw ConfigError(v->first + ": " + v->second);
}

EncoderConfig ExperimentConfig::encoder_config() const {
  EncoderConfig e = encoder == "vit-style" ? EncoderConfig::vit_style() : EncoderConfig{};
  e.context_length = variant.context_length;
  e.num_classes = kShapeNames.size();
  return e;
}

std::vector<DomainSpec> ExperimentConfig::selected_domains() const {
  const auto all = default_domains();
  if (domains.empty()) return all;
  std::vector<DomainSpec> out;
  for (const auto& name : domains) {
    for (const auto& d : all) {
      if (d.name == name) out.push_back(d);
    }
  }
  return out;
}

std::string ExperimentConfig::main_label() const {
  return same_components(variant, VariantConfig::preset(preset)) ? std::string(to_string(preset)) : "custom";
}

std::vector<ModelSpec> ExperimentConfig::models() const {
  std::vector<ModelSpec> out{{main_label(), variant, true}};
  for (auto p : compare) {
    VariantConfig v = variant;
    set_components_from(v, p);
    const std::string name(to_string(p));
    if (std::any_of(out.begin(), out.end(), [&](const ModelSpec& m) { return m.name == name; })) continue;
    out.push_back({name, v, true});
  }
  if (baselines) {
    for (auto& b : baseline_models(variant)) out.push_back(std::move(b));
  }
  return out;
}

ProtocolConfig ExperimentConfig::protocol_config() const {
  ProtocolConfig p;
  p.loss = loss;
  p.shots = shots;
  p.test_per_class = test_per_class;
  p.data_seed = data_seed;
  p.workers = workers;
  p.shuffle_classes = shuffle_classes;
  return p;
}

std::map<std::string, std::string> ExperimentConfig::to_map() const {
  std::vector<std::string> seed_text, compare_text;
  for (auto s : seeds) seed_text.push_back(std::to_string(s));
  for (auto p : compare) compare_text.push_back(std::string(to_string(p)));
  std::map<std::string, std::string> m;
  m["protocol"] = std::string(to_string(protocol));
  m["preset"] = std::string(to_string(preset));
  m["style_source"] = std::string(to_string(variant.style_source));
  m["content_branch"] = std::string(to_string(variant.content_branch));
  m["stats_use"] = std::string(to_string(variant.stats_use));
  m["bottleneck"] = std::string(to_string(variant.bottleneck));
  m["fusion"] = std::string(to_string(variant.fusion));
  m["M"] = std::to_string(variant.context_length);
  m["C_hat"] = std::to_string(variant.bottleneck_channels);
  m["depth"] = std::to_string(variant.projector_depth);
  m["encoder"] = encoder;
  m["encoder_seed"] = std::to_string(encoder_seed);
  m["tau"] = format_double(loss.tau);
  m["lr"] = format_double(loss.lr);
  m["betas"] = format_double(loss.beta1) + ", " + format_double(loss.beta2);
  m["batch"] = std::to_string(loss.batch_size);
  m["epochs"] = std::to_string(loss.epochs);
  m["shots"] = std::to_string(shots);
  m["test_per_class"] = std::to_string(test_per_class);
  m["seeds"] = join(seed_text);
  m["domains"] = domains.empty() ? "all" : join(domains);
  m["classes"] = std::to_string(classes);
  m["compare"] = compare.empty() ? "none" : join(compare_text);
  m["baselines"] = baselines ? "true" : "false";
  m["data_seed"] = std::to_string(data_seed);
  m["shuffle_classes"] = shuffle_classes ? "true" : "false";
  m["workers"] = std::to_string(workers);
  m["output"] = output;
  m["dump_dataset"] = dump_dataset ? "true" : "false";
  return m;
}

std::string ExperimentConfig::to_text() const {
  const auto m = to_map();
  std::string out;
  for (auto k : config_keys()) out += std::string(k) + " = " + m.at(std::string(k)) + '\n';
  return out;
}

ExperimentConfig parse_config_text(std::string_view text) {
  const auto kvs = parse_key_values(text);
  std::map<std::string, std::size_t> lines;
  for (const auto& kv : kvs) {
    if (auto [it, fresh] = lines.emplace(kv.key, kv.line); !fresh) {
      throw ConfigError("line " + std::to_string(kv.line) + ": key '" + kv.key + "' already set on line " +
                        std::to_string(it->second));
    }
  }
  ExperimentConfig c;
  // The preset goes first so explicit variant keys can override it.
  for (const auto& kv : kvs) {
    if (kv.key == "preset") apply(c, kv);
  }
  for (const auto& kv : kvs) {
    if (kv.key != "preset") apply(c, kv);
  }
  if (auto v = c.violation()) {
    auto it = lines.find(v->first);
    const std::string where = it != lines.end() ? "line " + std::to_string(it->second) + ": " : std::string();
    throw ConfigError(where + v->first + ": " + v->second);
  }
  return c;
}

ExperimentConfig parse_config(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw ConfigError("config file not found: " + path.string());
  return parse_config_text(read_file(path));
}

void apply_seed_offset(ExperimentConfig& config, std::string_view offset) {
  long long shift = 0;
  const std::string s = trim(offset);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), shift);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("STYLIP_SEED_OFFSET must be an integer, got '" + s + "'");
  }
  for (auto& seed : config.seeds) {
    if (shift < 0 && seed < static_cast<std::uint64_t>(-shift)) {
      throw ConfigError("STYLIP_SEED_OFFSET " + s + " makes seed " + std::to_string(seed) + " negative");
    }
    seed = static_cast<std::uint64_t>(static_cast<long long>(seed) + shift);
  }
}

// ---------------------------------------------------------------------------
// Running

std::string fold_matrix(const ExperimentConfig& config) {
  config.validate();
  std::ostringstream os;
  const auto domains = config.selected_domains();
  const auto models = config.models();
  os << "protocol " << to_string(config.protocol) << ": " << domains.size() << " folds x " << models.size()
     << " models x " << config.seeds.size() << " seeds\n";
  for (std::size_t f = 0; f < domains.size(); ++f) {
    const auto split =
        make_split(config.protocol, domains.size(), config.classes, f, config.shots, 0, config.shuffle_classes);
    std::vector<std::string> src, tgt;
    for (auto s : split.sources) src.push_back(domains[s].name);
    for (auto t : split.targets) tgt.push_back(domains[t].name);
    for (const auto& m : models) {
      for (auto seed : config.seeds) {
        os << "fold=" << domains[f].name << " variant=" << m.name << " seed=" << seed
           << (m.train ? " train" : " untrained") << " sources=[" << join(src) << "] targets=[" << join(tgt)
           << "]\n";
      }
    }
  }
  return os.str();
}

namespace {

std::string artifact_stem(const FoldArtifact& a) {
  return a.fold + "__" + a.variant + "__seed" + std::to_string(a.seed);
}

// A directory the runner may replace: absent, empty, or an earlier run.
void check_replaceable(const fs::path& target) {
  std::error_code ec;
  if (!fs::exists(target, ec)) return;
  if (!fs::is_directory(target, ec)) throw ConfigError("output path exists and is not a directory: " + target.string());
  if (fs::is_empty(target, ec)) return;
  if (fs::exists(target / "metrics.csv") || fs::exists(target / "sweep.csv") || fs::exists(target / "FAILED")) return;
  throw ConfigError("refusing to replace non-empty directory without earlier results: " + target.string());
}

fs::path temp_sibling(const fs::path& target) {
  const fs::path parent = target.has_parent_path() ? target.parent_path() : fs::path(".");
  fs::create_directories(parent);
  for (std::uint64_t i = 0;; ++i) {
    fs::path p = parent / ("." + target.filename().string() + ".tmp" + std::to_string(i));
    if (fs::create_directory(p)) return p;
  }
}

void install(const fs::path& staged, const fs::path& target) {
  std::error_code ec;
  fs::remove_all(target, ec);
  fs::rename(staged, target);
}

void write_failure(const fs::path& target, const std::string& message) {
  try {
    const fs::path tmp = temp_sibling(target);
    write_file_atomic(tmp / "FAILED", message + '\n');
    install(tmp, target);
  } catch (...) {
    // The error itself is still reported on the diagnostic stream.
  }
}

MetricReport write_experiment(const ExperimentConfig& config, const fs::path& dir, std::ostream& out) {
  fs::create_directories(dir);
  const auto encoders = build_frozen(config.encoder_seed, config.encoder_config());
  const auto domains = config.selected_domains();
  const auto models = config.models();
  ProtocolConfig pc = config.protocol_config();
  pc.keep_artifacts = true;
  out << "running " << to_string(config.protocol) << " with " << models.size() << " models over "
      << config.seeds.size() << " seeds\n";
  auto result = run_protocol(config.protocol, encoders, domains, config.classes, models, config.seeds, pc);

  fs::create_directories(dir / "checkpoints");
  fs::create_directories(dir / "logs");
  for (const auto& a : result.artifacts) {
    write_file_atomic(dir / "checkpoints" / (artifact_stem(a) + ".bin"), a.projectors);
    write_file_atomic(dir / "logs" / (artifact_stem(a) + ".csv"), a.log_csv);
  }
  write_file_atomic(dir / "encoders.bin", encoders.serialize());
  if (config.dump_dataset) dump_dataset(config, dir / "dataset");
  write_file_atomic(dir / "config.txt", config.to_text());
  write_file_atomic(dir / "metrics.json", result.report.to_json(config.to_map()));
  write_file_atomic(dir / "metrics.csv", result.report.to_csv());
  for (const auto& a : result.report.aggregates) {
    if (a.kind == "seed") continue;
    out << a.kind << ' ' << a.variant << ' ' << a.metric << ": " << format_double(a.mean) << " (std "
        << format_double(a.std) << ")\n";
  }
  return result.report;
}

}  // namespace

int run_experiment(const ExperimentConfig& config, const RunOptions& options, std::ostream& out,
                   std::ostream& err) {
  const fs::path target = config.output;
  try {
    config.validate();
    check_replaceable(target);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  if (options.dry_run) {
    out << fold_matrix(config);
    return 0;
  }
  fs::path staged;
  try {
    staged = temp_sibling(target);
    write_experiment(config, staged, out);
    install(staged, target);
    out << "wrote " << target.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::error_code ec;
    if (!staged.empty()) fs::remove_all(staged, ec);
    write_failure(target, e.what());
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

const std::vector<std::string_view>& sweep_axes() {
  static const std::vector<std::string_view> axes{"M", "C_hat", "shots", "depth", "fusion", "stats_use"};
  return axes;
}

void check_sweep_axis(const ExperimentConfig& config, std::string_view axis) {
  const auto& axes = sweep_axes();
  if (std::find(axes.begin(), axes.end(), axis) == axes.end()) {
    throw ConfigError("unknown sweep axis '" + std::string(axis) + "' (expected M, C_hat, shots, depth, fusion or stats_use)");
  }
  const VariantConfig& v = config.variant;
  const bool content = v.content_branch != ContentBranch::kOff;
  if (axis == "C_hat" && (!content || v.bottleneck != BottleneckMode::kConv1x1)) {
    throw ConfigError("sweep axis C_hat needs the content branch with conv1x1 bottlenecks");
  }
  if (axis == "fusion" && !content) throw ConfigError("sweep axis fusion needs the content branch");
  if (axis == "stats_use" && v.style_source != StyleSource::kMultiScaleStats) {
    throw ConfigError("sweep axis stats_use needs multi-scale-stats context tokens");
  }
}

int run_sweep(const ExperimentConfig& config, std::string_view axis, std::span<const std::string> values,
              const RunOptions& options, std::ostream& out, std::ostream& err) {
  const fs::path target = config.output;
  std::vector<ExperimentConfig> subs;
  try {
    config.validate();
    check_sweep_axis(config, axis);
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    std::set<std::string> seen;
    for (const auto& value : values) {
      if (!seen.insert(value).second) throw ConfigError("sweep value '" + value + "' listed twice");
      ExperimentConfig c = config;
      c.set(axis, value);
      c.output = (target / (std::string(axis) + "=" + value)).string();
      if (auto v = c.violation()) {
        throw ConfigError("sweep value " + std::string(axis) + "=" + value + ": " + v->second);
      }
      subs.push_back(std::move(c));
    }
    check_replaceable(target);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  if (options.dry_run) {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      out << "# " << axis << " = " << values[i] << '\n' << fold_matrix(subs[i]);
    }
    return 0;
  }
  fs::path staged;
  try {
    staged = temp_sibling(target);
    std::string csv = "# columns: axis,axis_value,";
    csv += MetricReport::kCsvColumns;
    csv += "\naxis,axis_value,";
    csv += MetricReport::kCsvColumns;
    csv += '\n';
    for (std::size_t i = 0; i < subs.size(); ++i) {
      out << "# " << axis << " = " << values[i] << '\n';
      const auto report = write_experiment(subs[i], staged / (std::string(axis) + "=" + values[i]), out);
      for (const auto& r : report.rows) {
        csv += std::string(axis) + ',' + values[i] + ',' + r.protocol + ',' + r.fold + ',' + r.variant + ',' +
               std::to_string(r.seed) + ',' + r.metric + ',' + format_double(r.value) + '\n';
      }
    }
    write_file_atomic(staged / "sweep.csv", csv);
    install(staged, target);
    out << "wrote " << target.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::error_code ec;
    if (!staged.empty()) fs::remove_all(staged, ec);
    write_failure(target, e.what());
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

void dump_dataset(const ExperimentConfig& config, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<std::size_t> classes(config.classes);
  for (std::size_t c = 0; c < classes.size(); ++c) classes[c] = c;
  nlohmann::ordered_json manifest;
  manifest["image_size"] = kImageSize;
  manifest["classes"] = nlohmann::ordered_json::array();
  for (auto c : classes) manifest["classes"].push_back(std::string(kShapeNames[c]));
  manifest["per_class"] = config.test_per_class;
  manifest["domains"] = nlohmann::ordered_json::array();
  for (const auto& d : config.selected_domains()) {
    const std::uint64_t seed = test_set_seed(config.data_seed, d.id);
    const auto data = generate_dataset(d, classes, config.test_per_class, seed);
    const std::size_t n = data.samples.size();
    Tensor images({n, kImageSize, kImageSize, 3});
    Tensor labels({n});
    for (std::size_t i = 0; i < n; ++i) {
      const auto& img = data.samples[i].image.data();
      std::copy(img.begin(), img.end(), images.data().begin() + static_cast<long>(i * img.size()));
      labels[i] = static_cast<double>(data.samples[i].label);
    }
    Container c{ContainerKind::kDataset, "domain = " + d.name + "\nseed = " + std::to_string(seed) + '\n',
                {{"images", std::move(images)}, {"labels", std::move(labels)}}};
    const std::string file = d.name + ".bin";
    write_file_atomic(dir / file, encode_container(c));
    manifest["domains"].push_back({{"name", d.name}, {"file", file}, {"samples", n}, {"seed", seed}});
  }
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + '\n');
}

}  // namespace stylip
