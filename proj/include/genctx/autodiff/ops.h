#pragma once

#include <span>
#include <vector>

#include "genctx/autodiff/tensor.h"

namespace genctx::ad {

// Elementwise. Binary ops need equal shapes; scalars go through the
// double overloads (no general broadcasting).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double b);
Tensor scale(const Tensor& a, double factor);
Tensor neg(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor tanh(const Tensor& a);
/// tanh approximation of GELU.
Tensor gelu(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }
inline Tensor operator-(const Tensor& a) { return neg(a); }

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Sum of squared entries, as a scalar.
Tensor sum_squares(const Tensor& a);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

/// Rows [begin, end) of a rank-2 tensor.
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
/// Columns [begin, end) of a rank-2 tensor.
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
/// Single row of a rank-2 tensor as a rank-1 tensor.
Tensor row(const Tensor& a, std::size_t index);
/// Repeats a rank-1 tensor as `rows` identical rows.
Tensor repeat_rows(const Tensor& v, std::size_t rows);

Tensor softmax(const Tensor& x, std::size_t axis);
Tensor log_softmax(const Tensor& x, std::size_t axis);

/// Normalizes over the last dimension, then applies gamma/beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

/// y = x Wᵀ + b for x of shape [..., din] (rank 1 or 2), W [dout x din], b [dout].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Arithmetic mean over frames: [T x d] -> [d]. T must be at least 1.
Tensor mean_pool(const Tensor& x);

/// Row lookup into `table` [V x d]; differentiable into the table.
Tensor embed_tokens(std::span<const int> ids, const Tensor& table);

}  // namespace genctx::ad
