#include "genctx/autodiff/grad_check.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace genctx::ad {

namespace {

double evaluate(const std::function<Tensor()>& f) {
  NoGradGuard no_grad;
  const double v = f().item();
  if (!std::isfinite(v)) throw std::domain_error("gradient check: f evaluated to a non-finite value");
  return v;
}

}  // namespace

GradCheckReport check_gradients(const std::function<Tensor()>& f, std::vector<Tensor> inputs,
                                double h, double tol, GradErrorNorm norm) {
  for (Tensor& x : inputs) {
    if (!x.is_leaf() || !x.requires_grad()) {
      throw std::invalid_argument("gradient check inputs must be leaves that require grad");
    }
    x.zero_grad();
  }
  const Tensor root = f();
  if (!std::isfinite(root.item())) {
    throw std::domain_error("gradient check: f evaluated to a non-finite value");
  }
  root.backward();

  GradCheckReport report;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor& x = inputs[k];
    std::vector<double> analytic(x.numel(), 0.0);
    if (x.has_grad()) std::copy(x.grad().begin(), x.grad().end(), analytic.begin());
    auto values = x.mutable_values();
    double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = evaluate(f);
      values[i] = saved - h;
      const double down = evaluate(f);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[i];
      ++report.coordinates;
      diff_sq += (a - numeric) * (a - numeric);
      a_sq += a * a;
      n_sq += numeric * numeric;
      if (norm == GradErrorNorm::PerTensor) continue;
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst = fmt::format("input {}, coordinate {}: analytic {:.6e} vs numeric {:.6e}",
                                   k, i, a, numeric);
      }
    }
    if (norm == GradErrorNorm::PerTensor) {
      const double rel = std::sqrt(diff_sq) / std::max({std::sqrt(a_sq), std::sqrt(n_sq), 1e-8});
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst = fmt::format("input {}: |a - n| {:.6e}, |a| {:.6e}, |n| {:.6e}", k, std::sqrt(diff_sq),
                                   std::sqrt(a_sq), std::sqrt(n_sq));
      }
    }
    x.zero_grad();
  }
  report.pass = report.max_rel_err < tol;
  return report;
}

GradCheckReport finite_diff_grad_check(const std::function<Tensor(const Tensor&)>& f,
                                       const Tensor& x, double h, double tol) {
  Tensor leaf = x.clone(true);
  return check_gradients([&] { return f(leaf); }, {leaf}, h, tol);
}

}  // namespace genctx::ad
