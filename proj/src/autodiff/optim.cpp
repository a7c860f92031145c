#include "genctx/autodiff/optim.h"

#include <cmath>

namespace genctx::ad {

Adam::Adam(std::vector<Tensor> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  for (const Tensor& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

double Adam::step() {
  double sq = 0.0;
  for (const Tensor& p : params_) {
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  const double clip =
      (config_.clip_norm > 0.0 && norm > config_.clip_norm) ? config_.clip_norm / norm : 1.0;

  ++steps_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = params_[k];
    auto grad = p.grad();
    auto values = p.mutable_values();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad.empty() ? 0.0 : grad[i] * clip;
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      values[i] -= config_.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config_.epsilon);
    }
  }
  return norm;
}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

}  // namespace genctx::ad
