#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "genctx/errors.h"

namespace genctx::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct Node;
using BackwardFn = std::function<void(Node& self)>;

// One recorded value in the computation graph. Leaves have no inputs;
// op results keep their inputs alive until the result itself is dropped.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;

  std::vector<double>& grad_buffer();
};

}  // namespace detail

/// Dense row-major tensor of 64-bit reals with reverse-mode gradients.
///
/// Copies are shallow: two `Tensor` objects may share one graph node, the
/// same way parameters are shared between a model and its optimizer.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                       bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> values() const;
  /// Writable view for leaves only (optimizer updates, test perturbation).
  std::span<double> mutable_values();
  double item() const;
  double operator[](std::size_t flat) const;
  double at(std::size_t row, std::size_t col) const;

  bool requires_grad() const;
  bool is_leaf() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();

  /// Same values, no graph history.
  Tensor detach() const;
  /// Value copy with fresh storage; the result is a leaf.
  Tensor clone(bool requires_grad = false) const;

  /// Reverse sweep from a scalar root. Leaf gradients accumulate additively.
  void backward() const;

  const detail::Node* node_id() const { return node_.get(); }

  // Used by op implementations.
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  void require_defined() const;
  std::shared_ptr<detail::Node> node_;
};

/// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

namespace detail {

/// Builds an op result. When no input needs a gradient (or grad mode is
/// off) the result is a plain leaf and `backward` is discarded.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                   BackwardFn backward);

}  // namespace detail

}  // namespace genctx::ad
