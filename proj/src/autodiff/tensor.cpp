#include "genctx/autodiff/tensor.h"

#include <fmt/format.h>

#include <cmath>
#include <unordered_set>

namespace genctx::ad {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  return fmt::format("[{}]", fmt::join(shape, "x"));
}

std::vector<double>& detail::Node::grad_buffer() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw ShapeError(fmt::format("tensor of shape {} needs {} values, got {}",
                                 shape_string(shape), shape_numel(shape), values.size()));
  }
  node_ = std::make_shared<detail::Node>();
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return filled(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(Shape{}, {value}, requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  Shape shape{values.size()};
  return Tensor(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                      bool requires_grad) {
  return Tensor(Shape{rows, cols}, std::move(values), requires_grad);
}

void Tensor::require_defined() const {
  if (!node_) throw std::logic_error("operation on an undefined tensor");
}

const Shape& Tensor::shape() const {
  require_defined();
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw ShapeError(fmt::format("axis {} out of range for shape {}", axis, shape_string(s)));
  }
  return s[axis];
}

std::size_t Tensor::numel() const {
  require_defined();
  return node_->value.size();
}

std::span<const double> Tensor::values() const {
  require_defined();
  return node_->value;
}

std::span<double> Tensor::mutable_values() {
  require_defined();
  if (!node_->inputs.empty()) throw std::logic_error("mutable_values() on a non-leaf tensor");
  return node_->value;
}

double Tensor::item() const {
  require_defined();
  if (node_->value.size() != 1) {
    throw ShapeError(fmt::format("item() on tensor of shape {}", shape_string(node_->shape)));
  }
  return node_->value[0];
}

double Tensor::operator[](std::size_t flat) const {
  require_defined();
  return node_->value.at(flat);
}

double Tensor::at(std::size_t row, std::size_t col) const {
  require_defined();
  if (node_->shape.size() != 2 || row >= node_->shape[0] || col >= node_->shape[1]) {
    throw std::out_of_range(
        fmt::format("index ({}, {}) for shape {}", row, col, shape_string(node_->shape)));
  }
  return node_->value[row * node_->shape[1] + col];
}

bool Tensor::requires_grad() const {
  require_defined();
  return node_->requires_grad;
}

bool Tensor::is_leaf() const {
  require_defined();
  return node_->inputs.empty();
}

bool Tensor::has_grad() const {
  require_defined();
  return !node_->grad.empty();
}

std::span<const double> Tensor::grad() const {
  require_defined();
  return node_->grad;
}

void Tensor::zero_grad() {
  require_defined();
  node_->grad.clear();
}

Tensor Tensor::detach() const {
  require_defined();
  return Tensor(node_->shape, node_->value, false);
}

Tensor Tensor::clone(bool requires_grad) const {
  require_defined();
  return Tensor(node_->shape, node_->value, requires_grad);
}

void Tensor::backward() const {
  require_defined();
  if (node_->value.size() != 1) {
    throw ShapeError(fmt::format("backward() needs a scalar root, got shape {}",
                                 shape_string(node_->shape)));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order of the tape.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->inputs.empty() || node->grad.empty()) continue;
    node->backward(*node);
  }
  // Intermediate gradients are per-sweep; only leaves accumulate.
  for (detail::Node* node : order) {
    if (!node->inputs.empty()) node->grad.clear();
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_mode_enabled() { return g_grad_enabled; }

Tensor detail::make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                           BackwardFn backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool needs_grad = false;
  if (g_grad_enabled) {
    for (const Tensor& t : inputs) needs_grad = needs_grad || t.requires_grad();
  }
  if (needs_grad) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const Tensor& t : inputs) node->inputs.push_back(t.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

}  // namespace genctx::ad
