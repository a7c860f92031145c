#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "genctx/autodiff/grad_check.h"
#include "genctx/autodiff/nn.h"
#include "support/gen.h"

namespace genctx::ad {
namespace {

using testing::random_tensor;

void set(const Tensor& t, std::vector<double> v) {
  ASSERT_EQ(t.numel(), v.size());
  Tensor handle = t;  // shares the node
  auto dst = handle.mutable_values();
  std::copy(v.begin(), v.end(), dst.begin());
}

void fill(const Tensor& t, double value) {
  Tensor handle = t;  // shares the node
  auto dst = handle.mutable_values();
  std::fill(dst.begin(), dst.end(), value);
}

AttentionParams scalar_attention(ParameterStore& store) {
  AttentionConfig cfg{1, 1, 1, 1, 1};
  AttentionParams p = AttentionParams::create(store, "att", cfg);
  set(p.query.weight, {1});
  set(p.query.bias, {0});
  set(p.key.weight, {1});
  set(p.value.weight, {1});
  set(p.value.bias, {0});
  set(p.output.weight, {1});
  set(p.output.bias, {0});
  return p;
}

TEST(Attention, HandCaseTwoByTwo) {
  ParameterStore store(1);
  const AttentionParams p = scalar_attention(store);
  const Tensor q = Tensor::matrix(2, 1, {1, 2});
  const Tensor kv = Tensor::matrix(2, 1, {0, 1});
  const Tensor out = multi_head_attention(q, kv, p);
  ASSERT_EQ(out.shape(), (Shape{2, 1}));
  // scores row i = [0, q_i]; output = softmax weight on the value 1
  EXPECT_NEAR(out[0], M_E / (1 + M_E), 1e-15);
  EXPECT_NEAR(out[1], std::exp(2.0) / (1 + std::exp(2.0)), 1e-15);
}

TEST(Attention, SingleKeyReturnsProjectedValue) {
  ParameterStore store(2);
  AttentionConfig cfg{2, 3, 4, 5, 6};
  const AttentionParams p = AttentionParams::create(store, "att", cfg);
  Rng rng(3);
  const Tensor q = random_tensor(rng, {7, 4});
  const Tensor kv = random_tensor(rng, {1, 5});
  const Tensor out = multi_head_attention(q, kv, p);
  // softmax over one key is 1, so every query row is W_o(W_v kv + b_v) + b_o
  const Tensor expected = linear(linear(kv, p.value), p.output);
  for (std::size_t t = 0; t < 7; ++t) {
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(out.at(t, j), expected.at(0, j), 1e-14);
  }
}

TEST(Attention, ZeroValueProjectionGivesOutputBias) {
  ParameterStore store(4);
  AttentionConfig cfg{2, 2, 3, 3, 3};
  const AttentionParams p = AttentionParams::create(store, "att", cfg);
  fill(p.value.weight, 0.0);
  fill(p.value.bias, 0.0);
  fill(p.output.bias, 0.0);
  Rng rng(5);
  const Tensor out = multi_head_attention(random_tensor(rng, {4, 3}), random_tensor(rng, {5, 3}), p);
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(Attention, RejectsEmptyKeysAndWrongWidths) {
  ParameterStore store(6);
  AttentionConfig cfg{1, 2, 3, 3, 3};
  const AttentionParams p = AttentionParams::create(store, "att", cfg);
  EXPECT_THROW(multi_head_attention(Tensor::zeros({2, 3}), Tensor::zeros({0, 3}), p), ShapeError);
  EXPECT_THROW(multi_head_attention(Tensor::zeros({2, 4}), Tensor::zeros({2, 3}), p), ShapeError);
  EXPECT_THROW(AttentionParams::create(store, "bad", AttentionConfig{0, 2, 3, 3, 3}), std::invalid_argument);
}

TEST(Attention, KeyProjectionHasNoBias) {
  ParameterStore store(7);
  AttentionParams::create(store, "att", AttentionConfig{1, 2, 3, 3, 3});
  EXPECT_FALSE(store.contains("att.key.bias"));
  EXPECT_TRUE(store.contains("att.key.weight"));
  EXPECT_TRUE(store.contains("att.query.bias"));
}

TEST(Attention, RowsAreConvexCombinationsOfValues) {
  // With identity value/output projections each output row lies inside the
  // per-column range of the value rows.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    ParameterStore store(seed);
    const AttentionParams p = AttentionParams::create(store, "att", AttentionConfig{1, 2, 2, 2, 2});
    set(p.value.weight, {1, 0, 0, 1});
    set(p.value.bias, {0, 0});
    set(p.output.weight, {1, 0, 0, 1});
    set(p.output.bias, {0, 0});
    const Tensor kv = random_tensor(rng, {5, 2}, -3, 3);
    const Tensor out = multi_head_attention(random_tensor(rng, {3, 2}, -3, 3), kv, p);
    for (std::size_t c = 0; c < 2; ++c) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t r = 0; r < 5; ++r) {
        lo = std::min(lo, kv.at(r, c));
        hi = std::max(hi, kv.at(r, c));
      }
      for (std::size_t t = 0; t < 3; ++t) {
        EXPECT_GE(out.at(t, c), lo - 1e-12);
        EXPECT_LE(out.at(t, c), hi + 1e-12);
      }
    }
  }
}

TEST(TransformerLayer, FreshLayerIsIdentity) {
  ParameterStore store(8);
  const auto layer = TransformerLayerParams::create(store, "l", 6, 2, 3, 12);
  Rng rng(9);
  const Tensor x = random_tensor(rng, {5, 6});
  const Tensor y = transformer_layer(x, layer);
  ASSERT_EQ(y.shape(), x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(TransformerLayer, RandomInitChangesInput) {
  ParameterStore store(10);
  const auto layer = TransformerLayerParams::create(store, "l", 6, 2, 3, 12, false);
  Rng rng(11);
  const Tensor x = random_tensor(rng, {5, 6});
  const Tensor y = transformer_layer(x, layer);
  double diff = 0;
  for (std::size_t i = 0; i < x.numel(); ++i) diff += std::abs(y[i] - x[i]);
  EXPECT_GT(diff, 1e-3);
}

TEST(TransformerLayer, GradientsMatchFiniteDifferences) {
  ParameterStore store(12);
  const auto layer = TransformerLayerParams::create(store, "l", 4, 2, 2, 8, false);
  Rng rng(13);
  const Tensor x = random_tensor(rng, {3, 4}, -1, 1, true);
  const Tensor w = random_tensor(rng, {3, 4});
  std::vector<Tensor> inputs{x};
  for (const auto& p : store.parameters()) inputs.push_back(p.tensor);
  const auto report = check_gradients([&] { return sum(mul(transformer_layer(x, layer), w)); }, inputs);
  EXPECT_TRUE(report.pass) << report.worst;
  EXPECT_LT(report.max_rel_err, 1e-6) << report.worst;
}

TEST(ParameterStore, DrawsDependOnlyOnSeedAndName) {
  ParameterStore a(21), b(21);
  a.uniform("first", {3}, 3);
  const Tensor wa = a.uniform("w", {2, 2}, 2);
  const Tensor wb = b.uniform("w", {2, 2}, 2);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(wa[i], wb[i]);
  ParameterStore c(22);
  const Tensor wc = c.uniform("w", {2, 2}, 2);
  EXPECT_NE(wa[0], wc[0]);
}

TEST(ParameterStore, UniformRespectsFanInBound) {
  ParameterStore store(23);
  const Tensor w = store.uniform("w", {50, 16}, 16);
  for (double v : w.values()) EXPECT_LE(std::abs(v), 0.25);
}

TEST(ParameterStore, CountsAndRejectsDuplicates) {
  ParameterStore store(24);
  LinearParams::create(store, "enc.lin", 3, 4);
  LinearParams::create_no_bias(store, "head", 4, 2);
  EXPECT_EQ(store.count(), 3u * 4 + 4 + 4 * 2);
  EXPECT_EQ(store.count("enc."), 16u);
  EXPECT_THROW(store.uniform("head.weight", {1}, 1), std::exception);
}

TEST(LayerNormParams, StartAtUnitScaleZeroShift) {
  ParameterStore store(25);
  const auto ln = LayerNormParams::create(store, "ln", 3);
  for (double v : ln.gamma.values()) EXPECT_EQ(v, 1.0);
  for (double v : ln.beta.values()) EXPECT_EQ(v, 0.0);
}

}  // namespace
}  // namespace genctx::ad
