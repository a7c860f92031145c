#include "genctx/autodiff/ops.h"

#include <Eigen/Core>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace genctx::ad {

namespace {

using detail::Node;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

// Gradient buffer of an input, or nullptr when it does not take gradients.
std::vector<double>* grad_of(Node& self, std::size_t input) {
  Node& in = *self.inputs[input];
  return in.requires_grad ? &in.grad_buffer() : nullptr;
}

const std::vector<double>& value_of(Node& self, std::size_t input) {
  return self.inputs[input]->value;
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(fmt::format("{}: shape mismatch {} vs {}", op, shape_string(a.shape()),
                                 shape_string(b.shape())));
  }
}

void require_rank(const char* op, const Tensor& a, std::size_t rank) {
  if (a.rank() != rank) {
    throw ShapeError(
        fmt::format("{}: expected rank {}, got shape {}", op, rank, shape_string(a.shape())));
  }
}

// Elementwise unary op with derivative expressed through input x and output y.
template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& a, Fwd fwd, Deriv deriv) {
  std::vector<double> out(a.numel());
  auto in = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(in[i]);
  return detail::make_result(a.shape(), std::move(out), {a}, [deriv](Node& self) {
    auto* ga = grad_of(self, 0);
    if (!ga) return;
    const auto& x = value_of(self, 0);
    for (std::size_t i = 0; i < x.size(); ++i) (*ga)[i] += self.grad[i] * deriv(x[i], self.value[i]);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.numel());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return detail::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (auto* g = grad_of(self, k)) {
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  std::vector<double> out(a.numel());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return detail::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (auto* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    }
    if (auto* g = grad_of(self, 1)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  std::vector<double> out(a.numel());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return detail::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const auto& x = value_of(self, 0);
    const auto& y = value_of(self, 1);
    if (auto* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * y[i];
    }
    if (auto* g = grad_of(self, 1)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * x[i];
    }
  });
}

Tensor add(const Tensor& a, double b) {
  return unary(a, [b](double x) { return x + b; }, [](double, double) { return 1.0; });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor exp(const Tensor& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
  return unary(
      a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor gelu(const Tensor& a) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kA = 0.044715;
  return unary(
      a,
      [](double x) { return 0.5 * x * (1.0 + std::tanh(kC * (x + kA * x * x * x))); },
      [](double x, double) {
        const double u = kC * (x + kA * x * x * x);
        const double t = std::tanh(u);
        const double du = kC * (1.0 + 3.0 * kA * x * x);
        return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
      });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  return detail::make_result(Shape{}, {total}, {a}, [](Node& self) {
    if (auto* g = grad_of(self, 0)) {
      for (double& gi : *g) gi += self.grad[0];
    }
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor sum_squares(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v * v;
  return detail::make_result(Shape{}, {total}, {a}, [](Node& self) {
    if (auto* g = grad_of(self, 0)) {
      const auto& x = value_of(self, 0);
      for (std::size_t i = 0; i < x.size(); ++i) (*g)[i] += 2.0 * x[i] * self.grad[0];
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError(fmt::format("matmul: inner dimensions disagree, {} vs {}",
                                 shape_string(a.shape()), shape_string(b.shape())));
  }
  std::vector<double> out(m * n);
  MapMat(out.data(), m, n).noalias() =
      ConstMapMat(a.values().data(), m, k) * ConstMapMat(b.values().data(), k, n);
  return detail::make_result(Shape{m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    ConstMapMat grad(self.grad.data(), m, n);
    if (auto* ga = grad_of(self, 0)) {
      MapMat(ga->data(), m, k).noalias() +=
          grad * ConstMapMat(value_of(self, 1).data(), k, n).transpose();
    }
    if (auto* gb = grad_of(self, 1)) {
      MapMat(gb->data(), k, n).noalias() +=
          ConstMapMat(value_of(self, 0).data(), m, k).transpose() * grad;
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_rank("transpose", a, 2);
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  MapMat(out.data(), n, m) = ConstMapMat(a.values().data(), m, n).transpose();
  return detail::make_result(Shape{n, m}, std::move(out), {a}, [m, n](Node& self) {
    if (auto* g = grad_of(self, 0)) {
      MapMat(g->data(), m, n) += ConstMapMat(self.grad.data(), n, m).transpose();
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw ShapeError(fmt::format("reshape: cannot view {} as {}", shape_string(a.shape()),
                                 shape_string(shape)));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  return detail::make_result(std::move(shape), std::move(out), {a}, [](Node& self) {
    if (auto* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    }
  });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  require_rank("slice_rows", a, 2);
  const std::size_t cols = a.dim(1);
  if (begin > end || end > a.dim(0)) {
    throw ShapeError(fmt::format("slice_rows: [{}, {}) out of range for {}", begin, end,
                                 shape_string(a.shape())));
  }
  auto v = a.values();
  std::vector<double> out(v.begin() + begin * cols, v.begin() + end * cols);
  return detail::make_result(Shape{end - begin, cols}, std::move(out), {a},
                             [begin, cols](Node& self) {
                               if (auto* g = grad_of(self, 0)) {
                                 for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                   (*g)[begin * cols + i] += self.grad[i];
                                 }
                               }
                             });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  require_rank("slice_cols", a, 2);
  const std::size_t rows = a.dim(0), cols = a.dim(1), width = end - begin;
  if (begin > end || end > cols) {
    throw ShapeError(fmt::format("slice_cols: [{}, {}) out of range for {}", begin, end,
                                 shape_string(a.shape())));
  }
  auto v = a.values();
  std::vector<double> out(rows * width);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(v.begin() + r * cols + begin, width, out.begin() + r * width);
  }
  return detail::make_result(
      Shape{rows, width}, std::move(out), {a}, [rows, cols, begin, width](Node& self) {
        if (auto* g = grad_of(self, 0)) {
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < width; ++c) {
              (*g)[r * cols + begin + c] += self.grad[r * width + c];
            }
          }
        }
      });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = parts.front().dim(0);
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    require_rank("concat_cols", p, 2);
    if (p.dim(0) != rows) {
      throw ShapeError(fmt::format("concat_cols: row count mismatch {} vs {}", rows, p.dim(0)));
    }
    offsets.push_back(total);
    total += p.dim(1);
  }
  std::vector<double> out(rows * total);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::size_t w = parts[k].dim(1);
    auto v = parts[k].values();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(v.begin() + r * w, w, out.begin() + r * total + offsets[k]);
    }
  }
  return detail::make_result(
      Shape{rows, total}, std::move(out), parts, [rows, total, offsets](Node& self) {
        for (std::size_t k = 0; k < self.inputs.size(); ++k) {
          auto* g = grad_of(self, k);
          if (!g) continue;
          const std::size_t w = self.inputs[k]->shape[1];
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < w; ++c) {
              (*g)[r * w + c] += self.grad[r * total + offsets[k] + c];
            }
          }
        }
      });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t cols = parts.front().dim(1);
  std::size_t rows = 0;
  std::vector<double> out;
  for (const Tensor& p : parts) {
    require_rank("concat_rows", p, 2);
    if (p.dim(1) != cols) {
      throw ShapeError(fmt::format("concat_rows: column mismatch {} vs {}", cols, p.dim(1)));
    }
    rows += p.dim(0);
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  return detail::make_result(Shape{rows, cols}, std::move(out), parts, [](Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      const std::size_t n = self.inputs[k]->value.size();
      if (auto* g = grad_of(self, k)) {
        for (std::size_t i = 0; i < n; ++i) (*g)[i] += self.grad[offset + i];
      }
      offset += n;
    }
  });
}

Tensor row(const Tensor& a, std::size_t index) {
  return reshape(slice_rows(a, index, index + 1), Shape{a.dim(1)});
}

Tensor repeat_rows(const Tensor& v, std::size_t rows) {
  require_rank("repeat_rows", v, 1);
  const std::size_t d = v.dim(0);
  std::vector<double> out;
  out.reserve(rows * d);
  for (std::size_t r = 0; r < rows; ++r) out.insert(out.end(), v.values().begin(), v.values().end());
  return detail::make_result(Shape{rows, d}, std::move(out), {v}, [rows, d](Node& self) {
    if (auto* g = grad_of(self, 0)) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < d; ++c) (*g)[c] += self.grad[r * d + c];
      }
    }
  });
}

namespace {

struct AxisLayout {
  std::size_t outer = 1, length = 1, inner = 1;
};

AxisLayout axis_layout(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw ShapeError(fmt::format("axis {} out of range for {}", axis, shape_string(shape)));
  }
  AxisLayout l;
  for (std::size_t i = 0; i < axis; ++i) l.outer *= shape[i];
  l.length = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) l.inner *= shape[i];
  return l;
}

}  // namespace

Tensor softmax(const Tensor& x, std::size_t axis) {
  const AxisLayout l = axis_layout(x.shape(), axis);
  auto in = x.values();
  std::vector<double> out(in.size());
  for (std::size_t o = 0; o < l.outer; ++o) {
    for (std::size_t i = 0; i < l.inner; ++i) {
      const std::size_t base = o * l.length * l.inner + i;
      double mx = -INFINITY;
      for (std::size_t k = 0; k < l.length; ++k) mx = std::max(mx, in[base + k * l.inner]);
      double total = 0.0;
      for (std::size_t k = 0; k < l.length; ++k) {
        const double e = std::exp(in[base + k * l.inner] - mx);
        out[base + k * l.inner] = e;
        total += e;
      }
      for (std::size_t k = 0; k < l.length; ++k) out[base + k * l.inner] /= total;
    }
  }
  return detail::make_result(x.shape(), std::move(out), {x}, [l](Node& self) {
    auto* g = grad_of(self, 0);
    if (!g) return;
    const auto& y = self.value;
    for (std::size_t o = 0; o < l.outer; ++o) {
      for (std::size_t i = 0; i < l.inner; ++i) {
        const std::size_t base = o * l.length * l.inner + i;
        double dot = 0.0;
        for (std::size_t k = 0; k < l.length; ++k) {
          dot += self.grad[base + k * l.inner] * y[base + k * l.inner];
        }
        for (std::size_t k = 0; k < l.length; ++k) {
          const std::size_t idx = base + k * l.inner;
          (*g)[idx] += y[idx] * (self.grad[idx] - dot);
        }
      }
    }
  });
}

Tensor log_softmax(const Tensor& x, std::size_t axis) {
  const AxisLayout l = axis_layout(x.shape(), axis);
  auto in = x.values();
  std::vector<double> out(in.size());
  for (std::size_t o = 0; o < l.outer; ++o) {
    for (std::size_t i = 0; i < l.inner; ++i) {
      const std::size_t base = o * l.length * l.inner + i;
      double mx = -INFINITY;
      for (std::size_t k = 0; k < l.length; ++k) mx = std::max(mx, in[base + k * l.inner]);
      double total = 0.0;
      for (std::size_t k = 0; k < l.length; ++k) total += std::exp(in[base + k * l.inner] - mx);
      const double lse = mx + std::log(total);
      for (std::size_t k = 0; k < l.length; ++k) {
        out[base + k * l.inner] = in[base + k * l.inner] - lse;
      }
    }
  }
  return detail::make_result(x.shape(), std::move(out), {x}, [l](Node& self) {
    auto* g = grad_of(self, 0);
    if (!g) return;
    const auto& y = self.value;
    for (std::size_t o = 0; o < l.outer; ++o) {
      for (std::size_t i = 0; i < l.inner; ++i) {
        const std::size_t base = o * l.length * l.inner + i;
        double total = 0.0;
        for (std::size_t k = 0; k < l.length; ++k) total += self.grad[base + k * l.inner];
        for (std::size_t k = 0; k < l.length; ++k) {
          const std::size_t idx = base + k * l.inner;
          (*g)[idx] += self.grad[idx] - std::exp(y[idx]) * total;
        }
      }
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (x.rank() == 0) throw ShapeError("layer_norm: scalar input");
  const std::size_t d = x.shape().back();
  if (d < 2) throw ShapeError("layer_norm: normalized dimension must be at least 2");
  if (gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    throw ShapeError(fmt::format("layer_norm: gamma/beta {} / {} do not match width {}",
                                 shape_string(gamma.shape()), shape_string(beta.shape()), d));
  }
  const std::size_t rows = x.numel() / d;
  auto in = x.values();
  auto gv = gamma.values(), bv = beta.values();
  std::vector<double> out(in.size());
  // Normalized values and inverse std are kept for the backward pass.
  auto xhat = std::make_shared<std::vector<double>>(in.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = in.data() + r * d;
    double mu = 0.0;
    for (std::size_t c = 0; c < d; ++c) mu += xr[c];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (xr[c] - mu) * (xr[c] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t c = 0; c < d; ++c) {
      const double h = (var + eps) > 0.0 ? (xr[c] - mu) * is : 0.0;
      (*xhat)[r * d + c] = h;
      out[r * d + c] = h * gv[c] + bv[c];
    }
  }
  return detail::make_result(
      x.shape(), std::move(out), {x, gamma, beta}, [rows, d, xhat, inv_std](Node& self) {
        const auto& gv = value_of(self, 1);
        auto* gx = grad_of(self, 0);
        auto* gg = grad_of(self, 1);
        auto* gb = grad_of(self, 2);
        std::vector<double> dh(d);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* h = xhat->data() + r * d;
          const double* go = self.grad.data() + r * d;
          double sum_dh = 0.0, sum_dh_h = 0.0;
          for (std::size_t c = 0; c < d; ++c) {
            dh[c] = go[c] * gv[c];
            sum_dh += dh[c];
            sum_dh_h += dh[c] * h[c];
            if (gg) (*gg)[c] += go[c] * h[c];
            if (gb) (*gb)[c] += go[c];
          }
          if (gx) {
            const double n = static_cast<double>(d);
            for (std::size_t c = 0; c < d; ++c) {
              (*gx)[r * d + c] += (*inv_std)[r] * (dh[c] - sum_dh / n - h[c] * sum_dh_h / n);
            }
          }
        }
      });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank("linear weight", weight, 2);
  const std::size_t dout = weight.dim(0), din = weight.dim(1);
  if (bias.shape() != Shape{dout}) {
    throw ShapeError(fmt::format("linear: bias {} does not match weight {}",
                                 shape_string(bias.shape()), shape_string(weight.shape())));
  }
  if (x.rank() < 1 || x.rank() > 2 || x.shape().back() != din) {
    throw ShapeError(fmt::format("linear: input {} does not match weight {}",
                                 shape_string(x.shape()), shape_string(weight.shape())));
  }
  const std::size_t rows = x.rank() == 2 ? x.dim(0) : 1;
  Shape out_shape = x.rank() == 2 ? Shape{rows, dout} : Shape{dout};
  std::vector<double> out(rows * dout);
  MapMat y(out.data(), rows, dout);
  y.noalias() = ConstMapMat(x.values().data(), rows, din) *
                ConstMapMat(weight.values().data(), dout, din).transpose();
  y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.values().data(), dout);
  return detail::make_result(
      std::move(out_shape), std::move(out), {x, weight, bias}, [rows, din, dout](Node& self) {
        ConstMapMat g(self.grad.data(), rows, dout);
        if (auto* gx = grad_of(self, 0)) {
          MapMat(gx->data(), rows, din).noalias() +=
              g * ConstMapMat(value_of(self, 1).data(), dout, din);
        }
        if (auto* gw = grad_of(self, 1)) {
          MapMat(gw->data(), dout, din).noalias() +=
              g.transpose() * ConstMapMat(value_of(self, 0).data(), rows, din);
        }
        if (auto* gb = grad_of(self, 2)) {
          Eigen::Map<Eigen::RowVectorXd>(gb->data(), dout) += g.colwise().sum();
        }
      });
}

Tensor mean_pool(const Tensor& x) {
  require_rank("mean_pool", x, 2);
  const std::size_t frames = x.dim(0), d = x.dim(1);
  if (frames == 0) throw ShapeError("mean_pool: sequence has no frames");
  std::vector<double> out(d, 0.0);
  auto v = x.values();
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t c = 0; c < d; ++c) out[c] += v[t * d + c];
  }
  const double inv = 1.0 / static_cast<double>(frames);
  for (double& o : out) o *= inv;
  return detail::make_result(Shape{d}, std::move(out), {x}, [frames, d, inv](Node& self) {
    if (auto* g = grad_of(self, 0)) {
      for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t c = 0; c < d; ++c) (*g)[t * d + c] += self.grad[c] * inv;
      }
    }
  });
}

Tensor embed_tokens(std::span<const int> ids, const Tensor& table) {
  require_rank("embed_tokens", table, 2);
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  std::vector<int> rows(ids.begin(), ids.end());
  std::vector<double> out;
  out.reserve(rows.size() * d);
  auto tv = table.values();
  for (int id : rows) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw std::out_of_range(fmt::format("embed_tokens: id {} outside vocabulary of {}", id, vocab));
    }
    out.insert(out.end(), tv.begin() + id * d, tv.begin() + (id + 1) * d);
  }
  Shape shape{rows.size(), d};  // before `rows` is moved into the closure
  return detail::make_result(std::move(shape), std::move(out), {table},
                             [rows = std::move(rows), d](Node& self) {
                               if (auto* g = grad_of(self, 0)) {
                                 for (std::size_t r = 0; r < rows.size(); ++r) {
                                   for (std::size_t c = 0; c < d; ++c) {
                                     (*g)[rows[r] * d + c] += self.grad[r * d + c];
                                   }
                                 }
                               }
                             });
}

}  // namespace genctx::ad
