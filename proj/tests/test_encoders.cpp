#include <gtest/gtest.h>

#include "stylip/encoders.hpp"
#include "stylip/errors.hpp"
#include "stylip/ops.hpp"
#include "support.hpp"

namespace stylip {
namespace {

using testing::random_tensor;

const FrozenEncoders& default_encoders() {
  static const FrozenEncoders enc = build_frozen(0, EncoderConfig{});
  return enc;
}

TEST(VisionEncoder, ZeroImageEmbeddingIsPinned) {
  const auto f = default_encoders().vision.forward(Tensor({32, 32, 3}));
  // Recorded from the first build; guards against silent initialization drift.
  EXPECT_DOUBLE_EQ(f.embedding[0], -0.04912923397511667);
  EXPECT_DOUBLE_EQ(f.embedding[1], 0.034345264806238576);
  EXPECT_DOUBLE_EQ(f.embedding[2], -0.00349209745016171);
  EXPECT_DOUBLE_EQ(f.embedding[3], -0.024111832220776844);
  EXPECT_GT(l2_norm(f.embedding.data()), 0.0);
}

TEST(VisionEncoder, ForwardIsDeterministic) {
  const Tensor img = random_tensor({32, 32, 3}, 1, 0.0, 1.0);
  const auto a = default_encoders().vision.forward(img);
  const auto b = default_encoders().vision.forward(img);
  EXPECT_EQ(a.embedding, b.embedding);
  for (std::size_t l = 0; l < a.stages.size(); ++l) EXPECT_EQ(a.stages[l], b.stages[l]);
}

TEST(VisionEncoder, DefaultStageSizesHalve) {
  const auto f = default_encoders().vision.forward(random_tensor({32, 32, 3}, 2, 0.0, 1.0));
  const std::size_t sizes[] = {16, 8, 4, 2}, widths[] = {8, 16, 32, 64};
  ASSERT_EQ(f.stages.size(), 4u);
  for (std::size_t l = 0; l < 4; ++l) {
    EXPECT_EQ(f.stages[l].shape(), (Shape{sizes[l], sizes[l], widths[l]}));
    EXPECT_EQ(EncoderConfig{}.stage_spatial(l), sizes[l]);
  }
  EXPECT_EQ(f.embedding.shape(), Shape{64});
}

TEST(VisionEncoder, VitStyleHasTwelveUniformStages) {
  const auto cfg = EncoderConfig::vit_style();
  ASSERT_EQ(cfg.stage_count(), 12u);
  for (auto w : cfg.stage_widths) EXPECT_EQ(w, cfg.stage_widths[0]);
  const auto enc = build_frozen(0, cfg);
  const auto f = enc.vision.forward(random_tensor({32, 32, 3}, 3, 0.0, 1.0));
  EXPECT_EQ(f.stages.size(), 12u);
  EXPECT_EQ(f.stages[2].shape()[0], 16u);
  EXPECT_EQ(f.stages[11].shape()[0], 2u);
}

TEST(VisionEncoder, RejectsWrongImageShape) {
  EXPECT_THROW(default_encoders().vision.forward(Tensor({16, 16, 3})), DimensionError);
}

std::vector<Tensor> seeded_prompt(std::uint64_t seed) {
  std::vector<Tensor> tokens;
  for (std::uint64_t i = 0; i < 5; ++i) tokens.push_back(random_tensor({64}, seed * 10 + i));
  return tokens;
}

TEST(TextEncoder, SamePromptSameEmbedding) {
  const auto p = seeded_prompt(1);
  EXPECT_EQ(default_encoders().text.forward(p), default_encoders().text.forward(p));
}

TEST(TextEncoder, SwappingContextTokensChangesEmbedding) {
  auto p = seeded_prompt(2);
  const Tensor before = default_encoders().text.forward(p);
  std::swap(p[0], p[1]);
  EXPECT_GT(max_abs_diff(before, default_encoders().text.forward(p)), 0.0);
}

TEST(TextEncoder, ClassRowChangesEmbedding) {
  auto p = seeded_prompt(3);
  p.back() = default_encoders().classes.row(0);
  const Tensor a = default_encoders().text.forward(p);
  p.back() = default_encoders().classes.row(5);
  EXPECT_GT(max_abs_diff(a, default_encoders().text.forward(p)), 0.0);
}

TEST(TextEncoder, BatchedForwardMatchesOnePromptAtATime) {
  const auto& text = default_encoders().text;
  std::vector<Tensor> singles;
  Tape tape;
  std::vector<Var> rows;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto p = seeded_prompt(10 + s);
    singles.push_back(text.forward(p));
    for (const auto& tok : p) rows.push_back(tape.constant(tok.reshaped({1, 64})));
  }
  const Tensor batched = text.forward_sequences(ops::concat(rows, 0)).value();
  ASSERT_EQ(batched.shape(), (Shape{3, 64}));
  for (std::size_t n = 0; n < 3; ++n)
    for (std::size_t j = 0; j < 64; ++j) EXPECT_NEAR(batched[n * 64 + j], singles[n][j], 1e-12);
}

TEST(TextEncoder, RejectsWrongLength) {
  auto p = seeded_prompt(4);
  p.pop_back();
  EXPECT_THROW(default_encoders().text.forward(p), DimensionError);
}

TEST(BuildFrozen, SameSeedSameBytes) {
  EXPECT_EQ(build_frozen(0, EncoderConfig{}).serialize(), default_encoders().serialize());
}

TEST(BuildFrozen, DifferentSeedDifferentBytes) {
  EXPECT_NE(build_frozen(1, EncoderConfig{}).serialize(), default_encoders().serialize());
}

TEST(BuildFrozen, ParameterCountMatchesLayerShapes) {
  // 3x3 convs 3->8->16->32->64 with biases, 2x2x64 -> 64 head, 5 positions,
  // two blocks of four 64x64 matrices plus a bias, readout, 8 class rows.
  const std::size_t vision = (27 * 8 + 8) + (72 * 16 + 16) + (144 * 32 + 32) + (288 * 64 + 64) + (256 * 64 + 64);
  const std::size_t text = 5 * 64 + 2 * (4 * 64 * 64 + 64) + (64 * 64 + 64);
  const std::size_t expected = vision + text + 8 * 64;
  EXPECT_EQ(EncoderConfig{}.parameter_count(), expected);
  std::size_t stored = 0;
  for (const auto& t : default_encoders().to_container().tensors) stored += t.value.size();
  EXPECT_EQ(stored, expected);
}

TEST(BuildFrozen, ContainerRoundTrip) {
  const auto& enc = default_encoders();
  const auto back = FrozenEncoders::from_container(decode_container(enc.serialize()));
  EXPECT_EQ(back.serialize(), enc.serialize());
  const Tensor img = random_tensor({32, 32, 3}, 5, 0.0, 1.0);
  EXPECT_EQ(back.vision.forward(img).embedding, enc.vision.forward(img).embedding);
}

TEST(ClassTable, UnknownLabelThrows) {
  EXPECT_THROW(default_encoders().classes.row(8), LookupError);
}

TEST(EncoderConfig, ValidationRejectsDegenerateShapes) {
  EncoderConfig c;
  c.stage_widths.clear();
  EXPECT_THROW(c.validate(), ConfigError);
  c = EncoderConfig{};
  c.embed_dim = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

}  // namespace
}  // namespace stylip
