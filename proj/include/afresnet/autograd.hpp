#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "afresnet/ops.hpp"
#include "afresnet/tensor.hpp"

namespace afresnet {

// Misuse of a tape, e.g. backward before anything was recorded.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Handle to a node recorded on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

// Running mean/variance buffers owned by a normalization layer.
struct RunningStats {
  Tensor mean;
  Tensor var;
};

// Reverse-mode computation graph. Nodes are appended in evaluation order, so
// the recording order is already a topological order and backward simply
// walks it in reverse. One tape per forward pass; not thread-safe.
class Tape {
 public:
  Var constant(Tensor value);
  // Leaf bound to an external parameter; its gradient accumulates into
  // param.grad on backward().
  Var parameter(Parameter& param);

  Var conv1d(Var x, Var w, std::size_t stride, std::size_t padding);
  Var batchnorm(Var x, Var gamma, Var beta, RunningStats& stats, ops::Mode mode, const ops::BatchNormOptions& opts);
  Var relu(Var x);
  Var add(Var a, Var b);
  Var global_avg_pool(Var x);
  Var dense(Var x, Var w, Var bias);
  // Scalar node holding the mean cross-entropy. Class probabilities are kept
  // on the tape, see probabilities().
  Var softmax_cross_entropy(Var logits, std::span<const int> labels);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  const Tensor& probabilities(Var loss) const;
  double scalar(Var v) const;

  // Seeds d(loss)/d(loss) = 1 and propagates to every reachable node.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Tensor aux;  // softmax probabilities for loss nodes
    Parameter* param = nullptr;
    bool requires_grad = true;
    std::function<void(Tape&, std::size_t)> backprop;
  };

  Var push(Tensor value, std::function<void(Tape&, std::size_t)> backprop);
  Node& node(Var v);
  const Node& node(Var v) const;
  const Tensor& val(std::size_t id) const;
  // Gradient buffer of a node, allocated lazily as zeros.
  Tensor& grad_buffer(std::size_t id);
  bool has_grad(std::size_t id) const;
  // nullptr for nodes that do not lead back to any parameter.
  Tensor* grad_target(std::size_t id);

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace afresnet
