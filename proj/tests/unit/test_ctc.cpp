#include <gtest/gtest.h>

#include <cmath>

#include "genctx/autodiff/grad_check.h"
#include "genctx/autodiff/ops.h"
#include "genctx/losses/ctc.h"
#include "support/gen.h"

namespace genctx::losses {
namespace {

using ad::Tensor;
using testing::random_log_probs;
using testing::random_target;
using testing::random_tensor;

std::vector<int> collapse(const std::vector<int>& path, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (int p : path) {
    if (p != prev && p != blank) out.push_back(p);
    prev = p;
  }
  return out;
}

// -log of the summed probability of every length-T path that collapses to
// the target, by brute-force enumeration of all V^T paths.
double enumerated_nll(const Tensor& log_probs, const std::vector<int>& target, int blank = 0) {
  const std::size_t T = log_probs.dim(0), V = log_probs.dim(1);
  std::vector<int> path(T, 0);
  double total = 0.0;
  while (true) {
    if (collapse(path, blank) == target) {
      double lp = 0.0;
      for (std::size_t t = 0; t < T; ++t) lp += log_probs.at(t, static_cast<std::size_t>(path[t]));
      total += std::exp(lp);
    }
    std::size_t k = 0;
    while (k < T && ++path[k] == static_cast<int>(V)) path[k++] = 0;
    if (k == T) break;
  }
  return -std::log(total);
}

TEST(Ctc, MatchesPathEnumeration) {
  Rng rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t V = 2 + rng.below(3);  // 2..4
    const std::size_t T = 1 + rng.below(6);  // 1..6
    const std::vector<int> target = random_target(rng, rng.below(4), V);  // 0..3
    if (ctc_min_frames(target) > T) continue;
    const Tensor lp = random_log_probs(rng, T, V);
    EXPECT_NEAR(ctc_loss(lp, target).item(), enumerated_nll(lp, target), 1e-8)
        << "T=" << T << " V=" << V << " |y|=" << target.size();
    ++checked;
  }
  EXPECT_GE(checked, 200);
}

TEST(Ctc, UniformHandCase) {
  // T=3, V=3, target (1, 2): the 5 paths aab abb _ab a_b ab_ each have mass 1/27.
  const Tensor lp = Tensor::filled({3, 3}, -std::log(3.0));
  const std::vector<int> target{1, 2};
  const double loss = ctc_loss(lp, target).item();
  EXPECT_NEAR(loss, -std::log(5.0 / 27.0), 1e-12);
  EXPECT_EQ(std::round(loss * 1e4) / 1e4, 1.6864);
}

TEST(Ctc, EmptyTargetIsAllBlank) {
  Rng rng(1);
  const Tensor lp = random_log_probs(rng, 4, 3);
  double expected = 0.0;
  for (std::size_t t = 0; t < 4; ++t) expected -= lp.at(t, 0);
  EXPECT_NEAR(ctc_loss(lp, std::vector<int>{}).item(), expected, 1e-12);
}

TEST(Ctc, MinFramesCountsRepeats) {
  EXPECT_EQ(ctc_min_frames(std::vector<int>{}), 0u);
  EXPECT_EQ(ctc_min_frames(std::vector<int>{1, 2, 3}), 3u);
  EXPECT_EQ(ctc_min_frames(std::vector<int>{1, 1}), 3u);
  EXPECT_EQ(ctc_min_frames(std::vector<int>{2, 2, 2, 1}), 6u);
}

TEST(Ctc, InfeasibleAlignmentThrows) {
  const Tensor lp = Tensor::filled({2, 3}, -std::log(3.0));
  EXPECT_THROW(ctc_loss(lp, std::vector<int>{1, 1}), InfeasibleAlignment);
  EXPECT_THROW(ctc_loss(lp, std::vector<int>{1, 2, 1}), InfeasibleAlignment);
  EXPECT_NO_THROW(ctc_loss(lp, std::vector<int>{1, 2}));
}

TEST(Ctc, RejectsBlankAndOutOfRangeLabels) {
  const Tensor lp = Tensor::filled({4, 3}, -std::log(3.0));
  EXPECT_THROW(ctc_loss(lp, std::vector<int>{0}), std::invalid_argument);
  EXPECT_THROW(ctc_loss(lp, std::vector<int>{3}), std::invalid_argument);
  EXPECT_THROW(ctc_loss(lp, std::vector<int>{-1}), std::invalid_argument);
}

TEST(Ctc, LossIsNonNegativeAndZeroForCertainPath) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor lp = random_log_probs(rng, 5, 4);
    EXPECT_GE(ctc_loss(lp, random_target(rng, 2, 4)).item(), 0.0);
  }
  // one-hot frames spelling "1 _ 2" leave exactly one path
  Tensor lp = Tensor::filled({3, 3}, -1e30);
  auto v = lp.mutable_values();
  v[0 * 3 + 1] = 0.0;
  v[1 * 3 + 0] = 0.0;
  v[2 * 3 + 2] = 0.0;
  EXPECT_NEAR(ctc_loss(lp, std::vector<int>{1, 2}).item(), 0.0, 1e-12);
}

TEST(Ctc, GradientThroughLogSoftmaxMatchesFiniteDifferences) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor logits = random_tensor(rng, {6, 4}, -2, 2);
    const std::vector<int> target = random_target(rng, 1 + rng.below(3), 4);
    const auto r = ad::finite_diff_grad_check(
        [&](const Tensor& x) { return ctc_loss(ad::log_softmax(x, 1), target); }, logits);
    EXPECT_TRUE(r.pass) << r.worst;
  }
}

TEST(Ctc, GreedyDecodeMatchesCollapseOfArgmax) {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t T = 1 + rng.below(10), V = 2 + rng.below(5);
    const Tensor lp = random_log_probs(rng, T, V);
    std::vector<int> best(T);
    for (std::size_t t = 0; t < T; ++t) {
      std::size_t arg = 0;
      for (std::size_t v = 1; v < V; ++v) {
        if (lp.at(t, v) > lp.at(t, arg)) arg = v;
      }
      best[t] = static_cast<int>(arg);
    }
    EXPECT_EQ(ctc_greedy_decode(lp), collapse(best, 0));
  }
}

TEST(Ctc, GreedyDecodeHandCases) {
  // argmax per frame: 1 1 0 1 2 2 -> "1 1 2"
  const Tensor lp = Tensor::matrix(6, 3, {0, 5, 0, 0, 5, 0, 5, 0, 0, 0, 5, 0, 0, 0, 5, 0, 0, 5});
  EXPECT_EQ(ctc_greedy_decode(lp), (std::vector<int>{1, 1, 2}));
  // ties resolve to the lowest id, here the blank
  EXPECT_TRUE(ctc_greedy_decode(Tensor::filled({3, 3}, 0.0)).empty());
}

}  // namespace
}  // namespace genctx::losses
