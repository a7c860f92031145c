#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "genctx/autodiff/tensor.h"

namespace genctx::losses {

/// The target cannot be aligned to the available frames
/// (T < |target| + number of adjacent repeats).
class InfeasibleAlignment : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Frames a CTC path needs to emit `target`: one per label plus a blank
/// between each pair of equal neighbours.
std::size_t ctc_min_frames(std::span<const int> target);

/// Negative log-likelihood of `target` under per-frame log-distributions
/// `log_probs` [T x V], summed over every alignment (forward algorithm in
/// log space). Gradient flows into `log_probs`.
///
/// Throws std::invalid_argument if the target contains `blank` or an id
/// outside [0, V), and InfeasibleAlignment if T is too short.
ad::Tensor ctc_loss(const ad::Tensor& log_probs, std::span<const int> target, int blank = 0);

/// Best-path decoding: per-frame argmax (lowest id on ties), collapse
/// repeats, drop blanks.
std::vector<int> ctc_greedy_decode(const ad::Tensor& log_probs, int blank = 0);

}  // namespace genctx::losses
