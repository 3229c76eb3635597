#include <gtest/gtest.h>

#include <cstdlib>
#include <cstring>
#include <limits>

#include "stylip/container.hpp"
#include "stylip/errors.hpp"
#include "stylip/key_value.hpp"
#include "stylip/ops.hpp"
#include "stylip/parameters.hpp"
#include "stylip/random.hpp"

namespace stylip {
namespace {

Container sample_container() {
  Container c;
  c.kind = ContainerKind::kProjectors;
  c.config = "a = 1\n";
  c.tensors = {{"w", Tensor::matrix({{1.5, -2}, {0, 3}})}, {"b", Tensor::vector({0.25})}};
  return c;
}

TEST(Container, RoundTrip) {
  const auto c = sample_container();
  const auto back = decode_container(encode_container(c));
  EXPECT_EQ(back.kind, c.kind);
  EXPECT_EQ(back.config, c.config);
  EXPECT_EQ(back.find("w"), c.tensors[0].value);
  EXPECT_THROW(back.find("missing"), LookupError);
}

TEST(Container, LayoutStartsWithMagicAndKind) {
  const std::string bytes = encode_container(sample_container());
  EXPECT_EQ(bytes.substr(0, 7), "STYLIP1");
  std::uint32_t kind = 0;
  std::memcpy(&kind, bytes.data() + 7, 4);
  EXPECT_EQ(kind, 2u);
}

TEST(Container, CorruptInputsAreRejected) {
  const std::string bytes = encode_container(sample_container());
  EXPECT_THROW(decode_container(bytes.substr(0, bytes.size() - 1)), Error);
  EXPECT_THROW(decode_container(bytes + "x"), Error);
  EXPECT_THROW(decode_container("NOTSTYL" + bytes.substr(7)), Error);
}

TEST(KeyValue, ParsesCommentsAndBlankLines) {
  const auto kvs = parse_key_values("# c\n\n a = 1 \nb=x y # trailing\n");
  ASSERT_EQ(kvs.size(), 2u);
  EXPECT_EQ(kvs[0].key, "a");
  EXPECT_EQ(kvs[0].value, "1");
  EXPECT_EQ(kvs[0].line, 3u);
  EXPECT_EQ(kvs[1].value, "x y");
  EXPECT_THROW(parse_key_values("novalue\n"), ConfigError);
  EXPECT_THROW(parse_key_values(" = 3\n"), ConfigError);
}

TEST(KeyValue, TypedValues) {
  EXPECT_EQ(parse_size({"k", "12", 1}), 12u);
  EXPECT_THROW(parse_size({"k", "-1", 1}), ConfigError);
  EXPECT_THROW(parse_size({"k", "1.5", 1}), ConfigError);
  EXPECT_DOUBLE_EQ(parse_double({"k", "2e-2", 1}), 0.02);
  EXPECT_THROW(parse_double({"k", "nan", 1}), ConfigError);
  EXPECT_TRUE(parse_bool({"k", "true", 1}));
  EXPECT_THROW(parse_bool({"k", "maybe", 1}), ConfigError);
  EXPECT_EQ(split_list(" a, b ,c "), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(KeyValue, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 2e-2, 123456789.125, -0.0, 5e-324}) {
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v) << format_double(v);
  }
  EXPECT_EQ(format_double(0.25), "0.25");
}

TEST(Random, DerivedSeedsAreStableAndDistinct) {
  EXPECT_EQ(derive_seed({1, 2}), derive_seed({1, 2}));
  EXPECT_NE(derive_seed({1, 2}), derive_seed({2, 1}));
  EXPECT_NE(derive_seed({1}), derive_seed({1, 0}));
}

TEST(Random, DistributionsStayInRange) {
  Rng rng(5);
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform(-2.0, 3.0);
    EXPECT_GE(u, -2.0);
    EXPECT_LT(u, 3.0);
    EXPECT_LT(rng.index(7), 7u);
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / 20000, 0.0, 0.05);
  EXPECT_NEAR(sq / 20000, 1.0, 0.05);
}

TEST(Random, SameSeedSameStream) {
  Rng a(9), b(9);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(ParameterSet, OrderAndLookup) {
  ParameterSet p;
  p.add("x", Tensor::vector({1, 2}));
  p.add("y", Tensor({2, 2}));
  EXPECT_EQ(p.index("y"), 1u);
  EXPECT_EQ(p.scalar_count(), 6u);
  EXPECT_THROW(p.add("x", Tensor({1})), Error);
  EXPECT_THROW(p.at("z"), LookupError);
  Tape t;
  Binding b(t, p, true);
  t.backward(ops::sum(ops::mul(b("x"), b("x"))));
  const auto grads = b.gradients();
  EXPECT_EQ(grads[0], Tensor::vector({2, 4}));
  EXPECT_EQ(grads[1], Tensor({2, 2}));
}

}  // namespace
}  // namespace stylip
