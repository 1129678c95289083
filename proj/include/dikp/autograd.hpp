#pragma once

// Minimal reverse-mode automatic differentiation over dense 4-D arrays.
//
// Activations are (1, C, H, W); convolution weights are (C_out, C_in, k, k);
// per-channel vectors are (1, C, 1, 1). Every op records its inputs and a
// backward rule; backward() walks the graph in reverse topological order.
// Intermediate gradients are reset on every backward() call, leaf gradients
// accumulate until zero_grad().

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dikp::ag {

struct Shape {
  std::size_t n = 1;
  std::size_t c = 1;
  std::size_t h = 1;
  std::size_t w = 1;

  std::size_t size() const noexcept { return n * c * h * w; }
  std::size_t plane() const noexcept { return h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // same size as value once the node requires grad
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;
  bool requires_grad = false;
  bool leaf = true;
};

class Tensor {
 public:
  Tensor() = default;

  /// Leaf that never receives gradients (network inputs, targets).
  static Tensor constant(Shape shape, std::vector<double> values);
  /// Trainable leaf.
  static Tensor parameter(Shape shape, std::vector<double> values);
  /// Interior node produced by an op; `backward` may be empty when no input
  /// requires grad.
  static Tensor make_result(Shape shape, std::vector<double> values,
                            std::vector<Tensor> inputs, std::function<void(Node&)> backward);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::span<const double> data() const { return node_->value; }
  /// Direct write access, meant for leaves (parameter updates, input refresh).
  std::span<double> mutable_data() { return node_->value; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->leaf; }
  void zero_grad();
  /// Value of a single-element tensor.
  double item() const;
  /// Same values, cut from the graph.
  Tensor detach() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

/// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled() noexcept;

/// Populates grad of every reachable node with d(loss)/d(node).
/// Throws ShapeError unless loss has exactly one element.
void backward(const Tensor& loss);

// ---------------------------------------------------------------------------
// Ops. All throw ShapeError on incompatible shapes.

/// Cross-correlation with reflect padding k / 2 and the given stride
/// (1 or 2); output spatial size is ceil(H / stride). bias is (1, C_out, 1, 1).
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride);
Tensor upsample_nearest(const Tensor& x, std::size_t factor = 2);
Tensor leaky_relu(const Tensor& x, double slope = 0.1);
Tensor sigmoid(const Tensor& x);
/// exp(x) / sum(exp(x)) over every element of x.
Tensor softmax_all(const Tensor& x);
/// Per-channel spatial normalization with learned gain and bias, each (1, C, 1, 1).
Tensor instance_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);
Tensor add(const Tensor& x, const Tensor& y);
/// Elementwise product.
Tensor mul(const Tensor& x, const Tensor& y);
Tensor concat_channels(const Tensor& x, const Tensor& y);
/// mean((x - target)^2) as a (1, 1, 1, 1) tensor.
Tensor mse_loss(const Tensor& x, const Tensor& target);
Tensor sum(const Tensor& x);
/// Same map as dikp::convolve: per-channel correlation of x (1, C, H, W) with
/// the single filter k (1, 1, h, w) anchored at (h / 2, w / 2), reflexive
/// boundary. Differentiable in both x and k.
Tensor convolve_reflect(const Tensor& x, const Tensor& k);

}  // namespace dikp::ag
