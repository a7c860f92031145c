#include "genctx/losses/ctc.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace genctx::losses {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double mx = std::max(a, b);
  return mx + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

std::size_t ctc_min_frames(std::span<const int> target) {
  std::size_t repeats = 0;
  for (std::size_t i = 1; i < target.size(); ++i) repeats += target[i] == target[i - 1];
  return target.size() + repeats;
}

ad::Tensor ctc_loss(const ad::Tensor& log_probs, std::span<const int> target, int blank) {
  if (log_probs.rank() != 2 || log_probs.dim(0) == 0) {
    throw ShapeError(fmt::format("ctc_loss expects [T x V] with T >= 1, got {}",
                                 ad::shape_string(log_probs.shape())));
  }
  const std::size_t frames = log_probs.dim(0);
  const std::size_t vocab = log_probs.dim(1);
  if (blank < 0 || static_cast<std::size_t>(blank) >= vocab) {
    throw std::invalid_argument(fmt::format("blank id {} outside vocabulary of {}", blank, vocab));
  }
  for (int label : target) {
    if (label == blank) throw std::invalid_argument("ctc target contains the blank id");
    if (label < 0 || static_cast<std::size_t>(label) >= vocab) {
      throw std::invalid_argument(fmt::format("ctc target id {} outside vocabulary of {}", label, vocab));
    }
  }
  if (frames < ctc_min_frames(target)) {
    throw InfeasibleAlignment(fmt::format("target of length {} needs {} frames, only {} available",
                                          target.size(), ctc_min_frames(target), frames));
  }

  // Blank-interleaved target: blank, y1, blank, y2, ..., yL, blank.
  const std::size_t states = 2 * target.size() + 1;
  std::vector<int> ext(states, blank);
  for (std::size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  auto can_skip = [&](std::size_t s) {
    return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2];
  };

  auto lp = log_probs.values();
  auto at = [&](std::size_t t, int k) { return lp[t * vocab + static_cast<std::size_t>(k)]; };

  std::vector<double> alpha(frames * states, kNegInf);
  alpha[0] = at(0, ext[0]);
  if (states > 1) alpha[1] = at(0, ext[1]);
  for (std::size_t t = 1; t < frames; ++t) {
    const double* prev = alpha.data() + (t - 1) * states;
    double* cur = alpha.data() + t * states;
    for (std::size_t s = 0; s < states; ++s) {
      double acc = prev[s];
      if (s >= 1) acc = log_add(acc, prev[s - 1]);
      if (can_skip(s)) acc = log_add(acc, prev[s - 2]);
      cur[s] = acc == kNegInf ? kNegInf : acc + at(t, ext[s]);
    }
  }
  const double* last = alpha.data() + (frames - 1) * states;
  const double log_likelihood = states > 1 ? log_add(last[states - 1], last[states - 2]) : last[0];

  return ad::detail::make_result(
      ad::Shape{}, {-log_likelihood}, {log_probs},
      [alpha = std::move(alpha), ext = std::move(ext), frames, vocab, states, blank,
       log_likelihood](ad::detail::Node& self) {
        ad::detail::Node& input = *self.inputs[0];
        if (!input.requires_grad) return;
        const auto& lpv = input.value;
        auto lp_at = [&](std::size_t t, int k) { return lpv[t * vocab + static_cast<std::size_t>(k)]; };
        auto skip = [&](std::size_t s) {
          return s + 2 < states && ext[s] != blank && ext[s] != ext[s + 2];
        };

        // beta includes the emission at t, like alpha.
        std::vector<double> beta(frames * states, kNegInf);
        double* bl = beta.data() + (frames - 1) * states;
        bl[states - 1] = lp_at(frames - 1, ext[states - 1]);
        if (states > 1) bl[states - 2] = lp_at(frames - 1, ext[states - 2]);
        for (std::size_t t = frames - 1; t-- > 0;) {
          const double* next = beta.data() + (t + 1) * states;
          double* cur = beta.data() + t * states;
          for (std::size_t s = 0; s < states; ++s) {
            double acc = next[s];
            if (s + 1 < states) acc = log_add(acc, next[s + 1]);
            if (skip(s)) acc = log_add(acc, next[s + 2]);
            cur[s] = acc == kNegInf ? kNegInf : acc + lp_at(t, ext[s]);
          }
        }

        // d(-log p)/d lp[t,k] = -sum_{s: ext[s]=k} alpha*beta / (y_t(k) p).
        auto& g = input.grad_buffer();
        const double upstream = self.grad[0];
        std::vector<double> occupancy(vocab);
        for (std::size_t t = 0; t < frames; ++t) {
          std::fill(occupancy.begin(), occupancy.end(), kNegInf);
          for (std::size_t s = 0; s < states; ++s) {
            const double ab = alpha[t * states + s] + beta[t * states + s];
            auto& o = occupancy[static_cast<std::size_t>(ext[s])];
            o = log_add(o, ab);
          }
          for (std::size_t k = 0; k < vocab; ++k) {
            if (occupancy[k] == kNegInf) continue;
            const double post = std::exp(occupancy[k] - lp_at(t, static_cast<int>(k)) - log_likelihood);
            g[t * vocab + k] -= upstream * post;
          }
        }
      });
}

std::vector<int> ctc_greedy_decode(const ad::Tensor& log_probs, int blank) {
  if (log_probs.rank() != 2) {
    throw ShapeError(fmt::format("ctc_greedy_decode expects [T x V], got {}",
                                 ad::shape_string(log_probs.shape())));
  }
  const std::size_t frames = log_probs.dim(0), vocab = log_probs.dim(1);
  auto v = log_probs.values();
  std::vector<int> out;
  int previous = -1;
  for (std::size_t t = 0; t < frames; ++t) {
    const auto first = v.begin() + static_cast<std::ptrdiff_t>(t * vocab);
    const int best = static_cast<int>(std::max_element(first, first + vocab) - first);
    if (best != previous && best != blank) out.push_back(best);
    previous = best;
  }
  return out;
}

}  // namespace genctx::losses
