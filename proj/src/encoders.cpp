#include "stylip/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stylip/errors.hpp"
#include "stylip/key_value.hpp"
#include "stylip/ops.hpp"
#include "stylip/random.hpp"

namespace stylip {
namespace {

constexpr double kInputStdFloor = 1e-3;

Tensor scaled_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

EncoderConfig config_from_text(std::string_view text) {
  EncoderConfig c;
  for (const auto& kv : parse_key_values(text)) {
    if (kv.key == "image_size") c.image_size = parse_size(kv);
    else if (kv.key == "image_channels") c.image_channels = parse_size(kv);
    else if (kv.key == "pool_every") c.pool_every = parse_size(kv);
    else if (kv.key == "embed_dim") c.embed_dim = parse_size(kv);
    else if (kv.key == "token_dim") c.token_dim = parse_size(kv);
    else if (kv.key == "context_length") c.context_length = parse_size(kv);
    else if (kv.key == "text_blocks") c.text_blocks = parse_size(kv);
    else if (kv.key == "num_classes") c.num_classes = parse_size(kv);
    else if (kv.key == "stage_widths") {
      c.stage_widths.clear();
      for (const auto& w : split_list(kv.value)) c.stage_widths.push_back(parse_size({kv.key, w, kv.line}));
    } else {
      throw ConfigError("encoder config: unknown key '" + kv.key + "'");
    }
  }
  c.validate();
  return c;
}

void check_input(const std::string& what, const Tensor& t, const Shape& expected) {
  if (t.shape() != expected) {
    throw DimensionError(what + ": expected " + shape_string(expected) + ", got " +
                         shape_string(t.shape()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// EncoderConfig

EncoderConfig EncoderConfig::vit_style() {
  EncoderConfig c;
  c.stage_widths.assign(12, 16);
  c.pool_every = 3;
  return c;
}

void EncoderConfig::validate() const {
  if (stage_widths.empty()) throw ConfigError("encoder needs at least one stage");
  for (auto w : stage_widths) {
    if (w == 0) throw ConfigError("encoder stage widths must be positive");
  }
  if (image_size == 0 || image_channels == 0 || embed_dim == 0 || token_dim == 0 ||
      context_length == 0 || num_classes == 0 || pool_every == 0) {
    throw ConfigError("encoder dimensions must be positive");
  }
  const std::size_t pools = stage_count() / pool_every;
  if (pools >= 64 || (image_size >> pools) == 0 || (image_size % (std::size_t{1} << pools)) != 0) {
    throw ConfigError("image size " + std::to_string(image_size) + " cannot be halved " +
                      std::to_string(pools) + " times");
  }
}

std::size_t EncoderConfig::stage_spatial(std::size_t stage) const {
  if (stage >= stage_count()) throw DimensionError("stage index out of range");
  return image_size >> ((stage + 1) / pool_every);
}

std::size_t EncoderConfig::parameter_count() const {
  std::size_t n = 0;
  std::size_t in = image_channels;
  for (auto w : stage_widths) {
    n += 9 * in * w + w;
    in = w;
  }
  const std::size_t last = stage_spatial(stage_count() - 1);
  n += last * last * in * embed_dim + embed_dim;
  n += (context_length + 1) * token_dim;
  n += text_blocks * (4 * token_dim * token_dim + token_dim);
  n += token_dim * embed_dim + embed_dim;
  n += num_classes * token_dim;
  return n;
}

std::string EncoderConfig::to_text() const {
  std::ostringstream os;
  os << "image_size = " << image_size << '\n'
     << "image_channels = " << image_channels << '\n'
     << "stage_widths = " << join_sizes(stage_widths) << '\n'
     << "pool_every = " << pool_every << '\n'
     << "embed_dim = " << embed_dim << '\n'
     << "token_dim = " << token_dim << '\n'
     << "context_length = " << context_length << '\n'
     << "text_blocks = " << text_blocks << '\n'
     << "num_classes = " << num_classes << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// VisionEncoder

VisionEncoder::VisionEncoder(const EncoderConfig& config, Rng& rng) : config_(config) {
  std::size_t in = config.image_channels;
  for (auto w : config.stage_widths) {
    kernels_.push_back(scaled_uniform({9 * in, w}, 9 * in, rng));
    biases_.push_back(scaled_uniform({w}, 9 * in, rng));
    in = w;
  }
  const std::size_t last = config.stage_spatial(config.stage_count() - 1);
  const std::size_t flat = last * last * in;
  head_weight_ = scaled_uniform({flat, config.embed_dim}, flat, rng);
  head_bias_ = scaled_uniform({config.embed_dim}, flat, rng);
}

ImageFeatures VisionEncoder::forward(const Tensor& image) const {
  const std::size_t size = config_.image_size;
  check_input("vision_forward", image, {size, size, config_.image_channels});

  // Each channel is standardized over the image before the first stage.
  Tensor x = image;
  {
    const std::size_t c = config_.image_channels;
    const std::size_t n = size * size;
    for (std::size_t ch = 0; ch < c; ++ch) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += x[i * c + ch];
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) var += (x[i * c + ch] - mean) * (x[i * c + ch] - mean);
      const double scale = 1.0 / (std::sqrt(var / static_cast<double>(n)) + kInputStdFloor);
      for (std::size_t i = 0; i < n; ++i) x[i * c + ch] = (x[i * c + ch] - mean) * scale;
    }
  }

  ImageFeatures out;
  std::size_t s = size;
  std::size_t cin = config_.image_channels;
  for (std::size_t l = 0; l < config_.stage_count(); ++l) {
    const std::size_t cout = config_.stage_widths[l];
    const auto& k = kernels_[l];
    const auto& b = biases_[l];
    Tensor y({s, s, cout});
    for (std::size_t px = 0; px < s; ++px) {
      for (std::size_t py = 0; py < s; ++py) {
        double* acc = y.data().data() + (px * s + py) * cout;
        std::copy_n(b.data().data(), cout, acc);
        for (int dx = -1; dx <= 1; ++dx) {
          const long qx = static_cast<long>(px) + dx;
          if (qx < 0 || qx >= static_cast<long>(s)) continue;
          for (int dy = -1; dy <= 1; ++dy) {
            const long qy = static_cast<long>(py) + dy;
            if (qy < 0 || qy >= static_cast<long>(s)) continue;
            const std::size_t tap = static_cast<std::size_t>((dx + 1) * 3 + (dy + 1));
            const double* src = x.data().data() + (static_cast<std::size_t>(qx) * s + qy) * cin;
            const double* wrow = k.data().data() + tap * cin * cout;
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const double v = src[ci];
              const double* w = wrow + ci * cout;
              for (std::size_t co = 0; co < cout; ++co) acc[co] += v * w[co];
            }
          }
        }
        for (std::size_t co = 0; co < cout; ++co) acc[co] = std::max(acc[co], 0.0);
      }
    }
    if ((l + 1) % config_.pool_every == 0) {
      const std::size_t h = s / 2;
      Tensor pooled({h, h, cout});
      for (std::size_t px = 0; px < h; ++px)
        for (std::size_t py = 0; py < h; ++py)
          for (std::size_t c = 0; c < cout; ++c) {
            double best = y[((2 * px) * s + 2 * py) * cout + c];
            for (std::size_t a = 0; a < 2; ++a)
              for (std::size_t bb = 0; bb < 2; ++bb) best = std::max(best, y[((2 * px + a) * s + 2 * py + bb) * cout + c]);
            pooled[(px * h + py) * cout + c] = best;
          }
      y = std::move(pooled);
      s = h;
    }
    out.stages.push_back(y);
    x = std::move(y);
    cin = cout;
  }

  const std::size_t d = config_.embed_dim;
  out.embedding = head_bias_;
  const std::size_t flat = x.size();
  for (std::size_t i = 0; i < flat; ++i) {
    const double v = x[i];
    const double* w = head_weight_.data().data() + i * d;
    for (std::size_t j = 0; j < d; ++j) out.embedding[j] += v * w[j];
  }
  return out;
}

void VisionEncoder::append_weights(std::vector<NamedTensor>& out) const {
  for (std::size_t l = 0; l < kernels_.size(); ++l) {
    out.push_back({"vision.stage" + std::to_string(l) + ".kernel", kernels_[l]});
    out.push_back({"vision.stage" + std::to_string(l) + ".bias", biases_[l]});
  }
  out.push_back({"vision.head.weight", head_weight_});
  out.push_back({"vision.head.bias", head_bias_});
}

void VisionEncoder::load_weights(const Container& c) {
  for (std::size_t l = 0; l < kernels_.size(); ++l) {
    kernels_[l] = c.find("vision.stage" + std::to_string(l) + ".kernel");
    biases_[l] = c.find("vision.stage" + std::to_string(l) + ".bias");
  }
  head_weight_ = c.find("vision.head.weight");
  head_bias_ = c.find("vision.head.bias");
}

// ---------------------------------------------------------------------------
// TextEncoder

TextEncoder::TextEncoder(const EncoderConfig& config, Rng& rng) : config_(config) {
  const std::size_t t = config.token_dim;
  for (std::size_t b = 0; b < config.text_blocks; ++b) {
    Block blk;
    blk.wq = scaled_uniform({t, t}, t, rng);
    blk.wk = scaled_uniform({t, t}, t, rng);
    blk.wv = scaled_uniform({t, t}, t, rng);
    blk.wo = scaled_uniform({t, t}, t, rng);
    blk.bo = scaled_uniform({t}, t, rng);
    blocks_.push_back(std::move(blk));
  }
  readout_weight_ = scaled_uniform({t, config.embed_dim}, t, rng);
  readout_bias_ = scaled_uniform({config.embed_dim}, t, rng);
  // Drawn last so the shared weights do not depend on the context length.
  positions_ = scaled_uniform({config.context_length + 1, t}, t, rng);
}

Var TextEncoder::forward(std::span<const Var> tokens) const {
  const std::size_t t = config_.token_dim;
  if (tokens.size() != sequence_length()) {
    throw DimensionError("text_forward: expected " + std::to_string(sequence_length()) +
                         " tokens, got " + std::to_string(tokens.size()));
  }
  std::vector<Var> rows;
  rows.reserve(tokens.size());
  for (const Var& tok : tokens) {
    if (tok.shape() != Shape{t}) {
      throw DimensionError("text_forward: token of shape " + shape_string(tok.shape()) +
                           ", expected [" + std::to_string(t) + "]");
    }
    rows.push_back(ops::reshape(tok, {1, t}));
  }
  return ops::reshape(forward_sequences(ops::concat(rows, 0)), {config_.embed_dim});
}

Var TextEncoder::forward_sequences(Var tokens) const {
  const std::size_t t = config_.token_dim;
  const std::size_t len = sequence_length();
  if (tokens.shape().size() != 2 || tokens.shape()[1] != t || tokens.shape()[0] == 0 || tokens.shape()[0] % len != 0) {
    throw DimensionError("text_forward: token block of shape " + shape_string(tokens.shape()) +
                         " is not a stack of " + std::to_string(len) + " x " + std::to_string(t) + " prompts");
  }
  Tape& tape = tokens.tape();
  const std::size_t count = tokens.shape()[0] / len;
  Tensor tiled({count * len, t});
  for (std::size_t p = 0; p < count; ++p) {
    std::copy_n(positions_.data().data(), len * t, tiled.data().data() + p * len * t);
  }
  Var x = ops::add(tokens, tape.constant(std::move(tiled)));
  const double attn_scale = 1.0 / std::sqrt(static_cast<double>(t));
  for (const auto& blk : blocks_) {
    Var q = ops::matmul(x, tape.constant_ref(blk.wq));
    Var k = ops::matmul(x, tape.constant_ref(blk.wk));
    Var v = ops::matmul(x, tape.constant_ref(blk.wv));
    Var mixed = ops::block_attention(q, k, v, len, attn_scale);
    Var h = ops::tanh(ops::add_bias(ops::matmul(mixed, tape.constant_ref(blk.wo)), tape.constant_ref(blk.bo)));
    x = ops::add(x, h);
  }
  Var pooled = ops::block_mean_rows(x, len);
  return ops::add_bias(ops::matmul(pooled, tape.constant_ref(readout_weight_)), tape.constant_ref(readout_bias_));
}

Tensor TextEncoder::forward(std::span<const Tensor> tokens) const {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& tok : tokens) vars.push_back(tape.constant_ref(tok));
  if (vars.empty()) throw DimensionError("text_forward: no tokens");
  return forward(vars).value();
}

void TextEncoder::append_weights(std::vector<NamedTensor>& out) const {
  out.push_back({"text.positions", positions_});
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const std::string p = "text.block" + std::to_string(b) + ".";
    out.push_back({p + "wq", blocks_[b].wq});
    out.push_back({p + "wk", blocks_[b].wk});
    out.push_back({p + "wv", blocks_[b].wv});
    out.push_back({p + "wo", blocks_[b].wo});
    out.push_back({p + "bo", blocks_[b].bo});
  }
  out.push_back({"text.readout.weight", readout_weight_});
  out.push_back({"text.readout.bias", readout_bias_});
}

void TextEncoder::load_weights(const Container& c) {
  positions_ = c.find("text.positions");
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const std::string p = "text.block" + std::to_string(b) + ".";
    blocks_[b].wq = c.find(p + "wq");
    blocks_[b].wk = c.find(p + "wk");
    blocks_[b].wv = c.find(p + "wv");
    blocks_[b].wo = c.find(p + "wo");
    blocks_[b].bo = c.find(p + "bo");
  }
  readout_weight_ = c.find("text.readout.weight");
  readout_bias_ = c.find("text.readout.bias");
}

// ---------------------------------------------------------------------------
// ClassEmbeddingTable

ClassEmbeddingTable::ClassEmbeddingTable(std::vector<Tensor> rows) : rows_(std::move(rows)) {
  for (const auto& r : rows_) {
    if (r.rank() != 1 || r.size() != rows_[0].size()) {
      throw DimensionError("class embedding rows must be vectors of equal length");
    }
  }
}

const Tensor& ClassEmbeddingTable::row(std::size_t label) const {
  if (!contains(label)) {
    throw LookupError("label " + std::to_string(label) + " is not registered in the class table (" +
                      std::to_string(rows_.size()) + " classes)");
  }
  return rows_[label];
}

void ClassEmbeddingTable::append_weights(std::vector<NamedTensor>& out) const {
  for (std::size_t y = 0; y < rows_.size(); ++y) out.push_back({"classes." + std::to_string(y), rows_[y]});
}

// ---------------------------------------------------------------------------

Container FrozenEncoders::to_container() const {
  Container c;
  c.kind = ContainerKind::kEncoders;
  c.config = config.to_text();
  vision.append_weights(c.tensors);
  text.append_weights(c.tensors);
  classes.append_weights(c.tensors);
  return c;
}

FrozenEncoders FrozenEncoders::from_container(const Container& c) {
  if (c.kind != ContainerKind::kEncoders) throw Error("container does not hold encoder weights");
  FrozenEncoders enc = build_frozen(0, config_from_text(c.config));
  enc.vision.load_weights(c);
  enc.text.load_weights(c);
  std::vector<Tensor> rows;
  for (std::size_t y = 0; y < enc.config.num_classes; ++y) rows.push_back(c.find("classes." + std::to_string(y)));
  enc.classes = ClassEmbeddingTable(std::move(rows));
  return enc;
}

FrozenEncoders build_frozen(std::uint64_t seed, const EncoderConfig& config) {
  config.validate();
  FrozenEncoders enc;
  enc.config = config;
  Rng vision_rng(derive_seed({seed, 1}));
  Rng text_rng(derive_seed({seed, 2}));
  Rng class_rng(derive_seed({seed, 3}));
  enc.vision = VisionEncoder(config, vision_rng);
  enc.text = TextEncoder(config, text_rng);
  std::vector<Tensor> rows;
  for (std::size_t y = 0; y < config.num_classes; ++y) {
    rows.push_back(scaled_uniform({config.token_dim}, 1, class_rng));  // one-hot lookup: fan-in 1
  }
  enc.classes = ClassEmbeddingTable(std::move(rows));
  return enc;
}

}  // namespace stylip
