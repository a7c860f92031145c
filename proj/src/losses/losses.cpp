#include "genctx/losses/losses.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "genctx/autodiff/ops.h"

namespace genctx::losses {

void validate(const LossConfig& config, std::size_t vocab_size) {
  if (!(config.alpha >= 0.0)) throw std::invalid_argument("alpha must be non-negative");
  if (config.blank < 0 || static_cast<std::size_t>(config.blank) >= vocab_size) {
    throw std::invalid_argument(
        fmt::format("blank id {} outside vocabulary of {}", config.blank, vocab_size));
  }
}

ad::Tensor cross_entropy(const ad::Tensor& logits, int label) {
  if (logits.rank() != 1) {
    throw ShapeError(fmt::format("cross_entropy expects a logit vector, got {}",
                                 ad::shape_string(logits.shape())));
  }
  const std::size_t n = logits.dim(0);
  if (label < 0 || static_cast<std::size_t>(label) >= n) {
    throw std::out_of_range(fmt::format("label {} outside {} classes", label, n));
  }
  auto z = logits.values();
  const double mx = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double v : z) total += std::exp(v - mx);
  const double lse = mx + std::log(total);
  const double loss = lse - z[static_cast<std::size_t>(label)];
  return ad::detail::make_result(ad::Shape{}, {loss}, {logits}, [lse, label](ad::detail::Node& self) {
    ad::detail::Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.grad_buffer();
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double p = std::exp(in.value[k] - lse);
      g[k] += self.grad[0] * (p - (static_cast<int>(k) == label ? 1.0 : 0.0));
    }
  });
}

ad::Tensor context_l2(const ad::Tensor& teacher, const ad::Tensor& student, ContextLossKind kind) {
  if (teacher.shape() != student.shape()) {
    throw ShapeError(fmt::format("context_l2: teacher {} vs student {}",
                                 ad::shape_string(teacher.shape()),
                                 ad::shape_string(student.shape())));
  }
  const ad::Tensor diff = ad::sub(student, teacher.detach());
  if (kind == ContextLossKind::SquaredNorm) return ad::sum_squares(diff);

  double sq = 0.0;
  for (double d : diff.values()) sq += d * d;
  const double norm = std::sqrt(sq);
  return ad::detail::make_result(ad::Shape{}, {norm}, {diff}, [norm](ad::detail::Node& self) {
    ad::detail::Node& in = *self.inputs[0];
    if (!in.requires_grad || norm < 1e-12) return;
    auto& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * in.value[i] / norm;
  });
}

ad::Tensor combined_loss(const ad::Tensor& task_loss, const ad::Tensor& context_loss,
                         const LossConfig& config) {
  if (config.alpha == 0.0) return task_loss;
  return ad::add(task_loss, ad::scale(context_loss, config.alpha));
}

}  // namespace genctx::losses
