#pragma once

#include "genctx/autodiff/tensor.h"

namespace genctx::losses {

enum class ContextLossKind {
  Norm,         // ||e - ê||_2, as written
  SquaredNorm,  // ||e - ê||_2^2
};

struct LossConfig {
  double alpha = 1.0;  // context-loss weight
  int blank = 0;
  ContextLossKind context_kind = ContextLossKind::Norm;
};

/// Validates alpha >= 0 and blank < vocab_size.
void validate(const LossConfig& config, std::size_t vocab_size);

/// -log softmax(logits)[label] for a rank-1 logit vector.
ad::Tensor cross_entropy(const ad::Tensor& logits, int label);

/// Distance between a teacher embedding (treated as a constant) and the
/// student embedding. The norm's gradient is taken as zero when the distance
/// is below 1e-12.
ad::Tensor context_l2(const ad::Tensor& teacher, const ad::Tensor& student,
                      ContextLossKind kind = ContextLossKind::Norm);

/// task + alpha * context
ad::Tensor combined_loss(const ad::Tensor& task_loss, const ad::Tensor& context_loss,
                         const LossConfig& config);

}  // namespace genctx::losses
