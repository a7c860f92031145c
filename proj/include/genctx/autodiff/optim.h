#pragma once

#include <vector>

#include "genctx/autodiff/tensor.h"

namespace genctx::ad {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Global gradient-norm clip; <= 0 disables clipping.
  double clip_norm = 5.0;
};

class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig config);

  /// Applies one update from the accumulated gradients and returns the
  /// gradient norm before clipping. Parameters without a gradient count as zero.
  double step();
  void zero_grad();
  long steps_taken() const { return steps_; }

 private:
  std::vector<Tensor> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_, v_;
  long steps_ = 0;
};

}  // namespace genctx::ad
