#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stylip/container.hpp"
#include "stylip/tape.hpp"
#include "stylip/tensor.hpp"

namespace stylip {

class Rng;

/// Shapes of the frozen toy dual encoder.
struct EncoderConfig {
  std::size_t image_size = 32;
  std::size_t image_channels = 3;
  std::vector<std::size_t> stage_widths{8, 16, 32, 64};
  // Stage l halves the spatial size when l is a multiple of pool_every (1-based).
  std::size_t pool_every = 1;
  std::size_t embed_dim = 64;        // d
  std::size_t token_dim = 64;        // d_tok
  std::size_t context_length = 4;    // M; the text encoder takes M + 1 tokens
  std::size_t text_blocks = 2;
  std::size_t num_classes = 8;

  /// Twelve uniform-width stages, halving after every third one.
  static EncoderConfig vit_style();

  void validate() const;
  std::size_t stage_count() const { return stage_widths.size(); }
  std::size_t stage_spatial(std::size_t stage) const;  // 0-based stage index
  std::size_t parameter_count() const;                 // closed form over all frozen tensors

  std::string to_text() const;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

/// Per-stage feature maps (W x H x C each) and the final image embedding.
struct ImageFeatures {
  std::vector<Tensor> stages;
  Tensor embedding;
};

/// f_v: per-channel input standardization, L stages of (3x3 conv, ReLU,
/// optional 2x max pool), then a flatten + linear head.
class VisionEncoder {
 public:
  VisionEncoder() = default;
  VisionEncoder(const EncoderConfig& config, Rng& rng);

  /// Image is W x H x 3 with pixels in [0, 1].
  ImageFeatures forward(const Tensor& image) const;

  void append_weights(std::vector<NamedTensor>& out) const;
  void load_weights(const Container& c);

 private:
  EncoderConfig config_;
  std::vector<Tensor> kernels_;  // [9 * C_in x C_out], taps ordered (dx, dy, c_in)
  std::vector<Tensor> biases_;
  Tensor head_weight_;
  Tensor head_bias_;
};

/// f_t: positional embeddings, `text_blocks` blocks of
/// x <- x + tanh(SelfAttention(x) W_o + b_o), then mean over positions and a
/// linear readout to d.
class TextEncoder {
 public:
  TextEncoder() = default;
  TextEncoder(const EncoderConfig& config, Rng& rng);

  std::size_t sequence_length() const { return config_.context_length + 1; }

  /// Records the forward pass on `tokens`' tape; weights enter as constants.
  Var forward(std::span<const Var> tokens) const;
  Tensor forward(std::span<const Tensor> tokens) const;

  /// Batched form: `tokens` stacks n prompts of M + 1 rows each into an
  /// [n(M + 1) x d_tok] block; returns the n embeddings as [n x d].
  Var forward_sequences(Var tokens) const;

  void append_weights(std::vector<NamedTensor>& out) const;
  void load_weights(const Container& c);

 private:
  struct Block {
    Tensor wq, wk, wv, wo, bo;
  };

  EncoderConfig config_;
  Tensor positions_;  // [(M + 1) x d_tok]
  std::vector<Block> blocks_;
  Tensor readout_weight_;
  Tensor readout_bias_;
};

/// Frozen CLS_y word embeddings, one row per registered label.
class ClassEmbeddingTable {
 public:
  ClassEmbeddingTable() = default;
  explicit ClassEmbeddingTable(std::vector<Tensor> rows);

  std::size_t size() const { return rows_.size(); }
  std::size_t dim() const { return rows_.empty() ? 0 : rows_[0].size(); }
  bool contains(std::size_t label) const { return label < rows_.size(); }
  const Tensor& row(std::size_t label) const;

  void append_weights(std::vector<NamedTensor>& out) const;

 private:
  std::vector<Tensor> rows_;
};

struct FrozenEncoders {
  EncoderConfig config;
  VisionEncoder vision;
  TextEncoder text;
  ClassEmbeddingTable classes;

  Container to_container() const;
  std::string serialize() const { return encode_container(to_container()); }
  static FrozenEncoders from_container(const Container& c);
};

/// Seeded scaled-uniform weights; identical (seed, config) give identical bytes.
FrozenEncoders build_frozen(std::uint64_t seed, const EncoderConfig& config);

}  // namespace stylip
