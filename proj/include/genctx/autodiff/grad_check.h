#pragma once

#include <functional>
#include <string>
#include <vector>

#include "genctx/autodiff/tensor.h"

namespace genctx::ad {

enum class GradErrorNorm {
  PerCoordinate,  // |a_i - n_i| / max(|a_i|, |n_i|, 1e-8), worst coordinate
  PerTensor,      // ||a - n|| / max(||a||, ||n||, 1e-8), worst input tensor
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  bool pass = true;
  std::size_t coordinates = 0;
  std::string worst;  // "input k, coordinate i: analytic a vs numeric n"
};

/// Compares backward() against central differences
/// (f(x+h e_i) - f(x-h e_i)) / 2h on every coordinate of every input.
/// Relative error is |a - n| / max(|a|, |n|, 1e-8) per coordinate by
/// default. The per-tensor form is for whole models: a coordinate whose true
/// derivative is ~1e-9 of the loss is below what central differences resolve
/// in double precision, while the tensor as a whole still is.
///
/// `inputs` must be leaves; they are perturbed in place and restored.
/// Throws std::domain_error if f evaluates to a non-finite value.
GradCheckReport check_gradients(const std::function<Tensor()>& f, std::vector<Tensor> inputs,
                                double h = 1e-5, double tol = 1e-4,
                                GradErrorNorm norm = GradErrorNorm::PerCoordinate);

/// Single-input form: f is evaluated on a leaf copy of x.
GradCheckReport finite_diff_grad_check(const std::function<Tensor(const Tensor&)>& f,
                                       const Tensor& x, double h = 1e-5, double tol = 1e-4);

}  // namespace genctx::ad
