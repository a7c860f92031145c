#include <gtest/gtest.h>

#include <cmath>

#include "genctx/autodiff/ops.h"
#include "genctx/errors.h"
#include "support/gen.h"

namespace genctx::ad {
namespace {

using testing::random_tensor;

std::vector<double> vals(const Tensor& t) { return {t.values().begin(), t.values().end()}; }
std::vector<double> grads(const Tensor& t) { return {t.grad().begin(), t.grad().end()}; }

TEST(Elementwise, AddComponentwise) {
  EXPECT_EQ(vals(add(Tensor::vector({1, 2}), Tensor::vector({3, 4}))), (std::vector<double>{4, 6}));
}

TEST(Elementwise, MultiplyByZeroIsZero) {
  Rng rng(1);
  const Tensor x = random_tensor(rng, {3, 4});
  const Tensor product = mul(x, Tensor::zeros({3, 4}));
  const Tensor scaled = scale(x, 0.0);
  for (double v : product.values()) EXPECT_EQ(v, 0.0);
  for (double v : scaled.values()) EXPECT_EQ(v, 0.0);
}

TEST(Elementwise, ShapeMismatchNamesBothShapes) {
  try {
    add(Tensor::vector({1, 2}), Tensor::vector({1, 2, 3}));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[3]"), std::string::npos) << msg;
  }
}

TEST(Elementwise, UnaryValues) {
  const Tensor x = Tensor::vector({-1.5, 0.0, 0.7});
  for (std::size_t i = 0; i < 3; ++i) {
    const double v = x[i];
    EXPECT_DOUBLE_EQ(exp(x)[i], std::exp(v));
    EXPECT_DOUBLE_EQ(tanh(x)[i], std::tanh(v));
    const double g = 0.5 * v * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (v + 0.044715 * v * v * v)));
    EXPECT_NEAR(gelu(x)[i], g, 1e-15);
  }
  EXPECT_DOUBLE_EQ(log(Tensor::scalar(M_E)).item(), 1.0);
  EXPECT_DOUBLE_EQ(sqrt(Tensor::scalar(9.0)).item(), 3.0);
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  Rng rng(2);
  const Tensor a = random_tensor(rng, {3, 3});
  const Tensor eye = Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  EXPECT_EQ(vals(matmul(a, eye)), vals(a));
}

TEST(Matmul, HandCase) {
  const Tensor a = Tensor::matrix(2, 2, {1, 2, 3, 4});
  const Tensor b = Tensor::matrix(2, 1, {5, 6});
  EXPECT_EQ(vals(matmul(a, b)), (std::vector<double>{17, 39}));
}

TEST(Matmul, MatchesTripleLoopOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(5), k = 1 + rng.below(5), m = 1 + rng.below(5);
    const Tensor a = random_tensor(rng, {n, k}), b = random_tensor(rng, {k, m});
    const Tensor c = matmul(a, b);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += a.at(i, p) * b.at(p, j);
        EXPECT_NEAR(c.at(i, j), s, 1e-12);
      }
    }
  }
}

TEST(Matmul, InnerDimensionMismatchThrows) {
  EXPECT_THROW(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ShapeError);
}

TEST(Matmul, GradientRules) {
  Rng rng(4);
  Tensor a = random_tensor(rng, {2, 3}, -1, 1, true), b = random_tensor(rng, {3, 2}, -1, 1, true);
  const Tensor g = random_tensor(rng, {2, 2});
  sum(mul(matmul(a, b), g)).backward();
  // dA = G Bᵀ, dB = Aᵀ G
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double da = 0.0;
      for (std::size_t k = 0; k < 2; ++k) da += g.at(i, k) * b.at(j, k);
      EXPECT_NEAR(a.grad()[i * 3 + j], da, 1e-12);
    }
  }
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t k = 0; k < 2; ++k) {
      double db = 0.0;
      for (std::size_t i = 0; i < 2; ++i) db += a.at(i, j) * g.at(i, k);
      EXPECT_NEAR(b.grad()[j * 2 + k], db, 1e-12);
    }
  }
}

TEST(Softmax, ConstantRowIsUniform) {
  const Tensor s = softmax(Tensor::matrix(1, 4, {2, 2, 2, 2}), 1);
  for (double v : s.values()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Softmax, LogThreeCase) {
  const Tensor s = softmax(Tensor::matrix(1, 2, {0.0, std::log(3.0)}), 1);
  EXPECT_NEAR(s[0], 0.25, 1e-15);
  EXPECT_NEAR(s[1], 0.75, 1e-15);
}

TEST(Softmax, ShiftInvariantAndNormalized) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const Tensor x = random_tensor(rng, {3, 5}, -5, 5);
    const double c = rng.uniform(-50, 50);
    for (std::size_t axis : {0u, 1u}) {
      const Tensor a = softmax(x, axis), b = softmax(add(x, c), axis);
      for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
    }
    const Tensor rows = softmax(x, 1);
    for (std::size_t r = 0; r < 3; ++r) {
      double s = 0.0;
      for (std::size_t c2 = 0; c2 < 5; ++c2) s += rows.at(r, c2);
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Softmax, LargeInputsStayFinite) {
  const Tensor s = softmax(Tensor::matrix(1, 3, {1000, 1001, 999}), 1);
  for (double v : s.values()) EXPECT_TRUE(std::isfinite(v));
  const Tensor l = log_softmax(Tensor::matrix(1, 3, {-1000, 0, 1000}), 1);
  EXPECT_NEAR(l[2], 0.0, 1e-12);
}

TEST(LayerNorm, ConstantVectorGivesZeros) {
  const Tensor y = layer_norm(Tensor::matrix(1, 4, {3, 3, 3, 3}), Tensor::filled({4}, 1.0), Tensor::zeros({4}));
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, ClosedFormWithoutEpsilon) {
  const Tensor y = layer_norm(Tensor::vector({1, 3}), Tensor::filled({2}, 1.0), Tensor::zeros({2}), 0.0);
  EXPECT_DOUBLE_EQ(y[0], -1.0);
  EXPECT_DOUBLE_EQ(y[1], 1.0);
}

TEST(LayerNorm, OutputHasZeroMean) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor y = layer_norm(random_tensor(rng, {4, 7}, -10, 10), Tensor::filled({7}, 1.0), Tensor::zeros({7}));
    for (std::size_t r = 0; r < 4; ++r) {
      double m = 0.0;
      for (std::size_t c = 0; c < 7; ++c) m += y.at(r, c);
      EXPECT_LT(std::abs(m / 7.0), 1e-10);
    }
  }
}

TEST(LayerNorm, WidthOneRejected) {
  EXPECT_THROW(layer_norm(Tensor::vector({1.0}), Tensor::filled({1}, 1.0), Tensor::zeros({1})), ShapeError);
}

TEST(Backward, SumGivesOnes) {
  Tensor x = Tensor::vector({1, -2, 5}, true);
  sum(x).backward();
  EXPECT_EQ(grads(x), (std::vector<double>{1, 1, 1}));
}

TEST(Backward, SquareAtThreeGivesSix) {
  Tensor x = Tensor::scalar(3.0, true);
  mul(x, x).backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
}

TEST(Backward, FanOutAccumulates) {
  Tensor x = Tensor::scalar(2.0, true);
  const Tensor y = add(mul(x, x), add(scale(x, 3.0), exp(x)));
  y.backward();
  EXPECT_NEAR(x.grad()[0], 4.0 + 3.0 + std::exp(2.0), 1e-12);
}

TEST(Backward, RepeatedBackwardAccumulatesIntoLeaves) {
  Tensor x = Tensor::scalar(1.5, true);
  scale(x, 2.0).backward();
  scale(x, 2.0).backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 4.0);
  x.zero_grad();
  scale(x, 2.0).backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 2.0);
}

TEST(Backward, NonScalarRootRejected) {
  Tensor x = Tensor::vector({1, 2}, true);
  EXPECT_THROW(scale(x, 2.0).backward(), ShapeError);
}

TEST(Backward, DetachStopsGradient) {
  Tensor x = Tensor::scalar(2.0, true);
  const Tensor y = add(mul(x, x.detach()), x);
  y.backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 3.0);  // d/dx (x * c + x) with c = 2
}

TEST(Backward, NoGradGuardRecordsNothing) {
  Tensor x = Tensor::scalar(2.0, true);
  Tensor y;
  {
    NoGradGuard guard;
    y = mul(x, x);
  }
  EXPECT_FALSE(y.requires_grad());
  EXPECT_TRUE(grad_mode_enabled());
}

TEST(Backward, SharedLeafAcrossTwoGraphs) {
  // Parameters are shared nodes: both uses feed the same gradient buffer.
  Tensor w = Tensor::vector({1.0, 2.0}, true);
  const Tensor alias = w;
  add(sum(w), sum(scale(alias, 2.0))).backward();
  EXPECT_EQ(grads(w), (std::vector<double>{3.0, 3.0}));
  EXPECT_EQ(w.node_id(), alias.node_id());
}

TEST(Shapes, SliceConcatRoundTrip) {
  Rng rng(7);
  const Tensor a = random_tensor(rng, {4, 6});
  const Tensor joined = concat_cols({slice_cols(a, 0, 2), slice_cols(a, 2, 6)});
  EXPECT_EQ(vals(joined), vals(a));
  const Tensor stacked = concat_rows({slice_rows(a, 0, 1), slice_rows(a, 1, 4)});
  EXPECT_EQ(vals(stacked), vals(a));
  EXPECT_EQ(vals(row(a, 2)), vals(reshape(slice_rows(a, 2, 3), {6})));
  EXPECT_THROW(slice_rows(a, 3, 5), ShapeError);
  EXPECT_THROW(reshape(a, {5, 5}), ShapeError);
}

TEST(Shapes, TransposeTwiceIsIdentity) {
  Rng rng(8);
  const Tensor a = random_tensor(rng, {3, 5});
  EXPECT_EQ(vals(transpose(transpose(a))), vals(a));
  EXPECT_EQ(transpose(a).shape(), (Shape{5, 3}));
}

TEST(MeanPool, SingleFrameIsThatFrame) {
  const Tensor x = Tensor::matrix(1, 3, {1, -2, 4});
  EXPECT_EQ(vals(mean_pool(x)), (std::vector<double>{1, -2, 4}));
}

TEST(MeanPool, SymmetricPair) {
  EXPECT_EQ(vals(mean_pool(Tensor::matrix(2, 2, {0, 2, 2, 0}))), (std::vector<double>{1, 1}));
}

TEST(MeanPool, FramePermutationInvariant) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t t = 1 + rng.below(8);
    const Tensor x = random_tensor(rng, {t, 4});
    std::vector<Tensor> rows;
    for (std::size_t i : rng.permutation(t)) rows.push_back(slice_rows(x, i, i + 1));
    const Tensor a = mean_pool(x), b = mean_pool(concat_rows(rows));
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(a[i], b[i], 1e-14);
  }
}

TEST(MeanPool, EmptyRejected) { EXPECT_THROW(mean_pool(Tensor::zeros({0, 3})), ShapeError); }

TEST(EmbedTokens, Lookup) {
  const Tensor table = Tensor::matrix(2, 2, {1, 2, 3, 4});
  const std::vector<int> ids{0};
  EXPECT_EQ(vals(embed_tokens(ids, table)), (std::vector<double>{1, 2}));
}

TEST(EmbedTokens, EmptyIdsGiveZeroRows) {
  const Tensor e = embed_tokens(std::vector<int>{}, Tensor::zeros({3, 5}));
  EXPECT_EQ(e.shape(), (Shape{0, 5}));
}

TEST(EmbedTokens, OutOfVocabularyRejected) {
  const std::vector<int> ids{3};
  EXPECT_THROW(embed_tokens(ids, Tensor::zeros({3, 2})), std::out_of_range);
}

TEST(EmbedTokens, RepeatedIdsAccumulateGradient) {
  Tensor table = Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6}, true);
  const std::vector<int> ids{2, 0, 2};
  sum(embed_tokens(ids, table)).backward();
  EXPECT_EQ(grads(table), (std::vector<double>{1, 1, 0, 0, 2, 2}));
}

TEST(Linear, IdentityWeights) {
  const Tensor x = Tensor::vector({3, -1});
  const Tensor y = linear(x, Tensor::matrix(2, 2, {1, 0, 0, 1}), Tensor::zeros({2}));
  EXPECT_EQ(vals(y), vals(x));
}

TEST(Linear, ZeroInputGivesBias) {
  const Tensor y = linear(Tensor::zeros({2}), Tensor::matrix(2, 2, {5, 6, 7, 8}), Tensor::vector({0.5, -1}));
  EXPECT_EQ(vals(y), (std::vector<double>{0.5, -1}));
}

TEST(Linear, HandCase) {
  // W = [[1, 2], [3, 4]], b = [1, -1], x = [2, 1] -> [5, 9]
  const Tensor y = linear(Tensor::vector({2, 1}), Tensor::matrix(2, 2, {1, 2, 3, 4}), Tensor::vector({1, -1}));
  EXPECT_EQ(vals(y), (std::vector<double>{5, 9}));
}

TEST(Linear, DimensionMismatchThrows) {
  EXPECT_THROW(linear(Tensor::zeros({3}), Tensor::zeros({2, 2}), Tensor::zeros({2})), ShapeError);
  EXPECT_THROW(linear(Tensor::zeros({2}), Tensor::zeros({2, 2}), Tensor::zeros({3})), ShapeError);
}

}  // namespace
}  // namespace genctx::ad
