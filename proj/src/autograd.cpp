#include "afresnet/autograd.hpp"

#include <string>
#include <utility>

namespace afresnet {

Var Tape::push(Tensor value, std::function<void(Tape&, std::size_t)> backprop) {
  Node n;
  n.value = std::move(value);
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Tape::Node& Tape::node(Var v) {
  if (v.id >= nodes_.size()) throw StateError("variable " + std::to_string(v.id) + " is not on this tape");
  return nodes_[v.id];
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw StateError("variable " + std::to_string(v.id) + " is not on this tape");
  return nodes_[v.id];
}

const Tensor& Tape::val(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.param ? n.param->value : n.value;
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.param) {
    if (!n.param->grad.same_shape(n.param->value)) n.param->grad = Tensor(n.param->value.dims());
    return n.param->grad;
  }
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.dims());
  return n.grad;
}

bool Tape::has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }

Tensor* Tape::grad_target(std::size_t id) { return nodes_[id].requires_grad ? &grad_buffer(id) : nullptr; }

Var Tape::constant(Tensor value) {
  Var v = push(std::move(value), nullptr);
  nodes_[v.id].requires_grad = false;
  return v;
}

Var Tape::parameter(Parameter& param) {
  Node n;
  n.param = &param;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const Tensor& Tape::value(Var v) const {
  node(v);
  return val(v.id);
}

const Tensor& Tape::grad(Var v) const {
  const Node& n = node(v);
  return n.param ? n.param->grad : n.grad;
}

const Tensor& Tape::probabilities(Var loss) const {
  const Node& n = node(loss);
  if (n.aux.empty()) throw StateError("node " + std::to_string(loss.id) + " is not a cross-entropy loss");
  return n.aux;
}

double Tape::scalar(Var v) const {
  const Tensor& t = value(v);
  if (t.size() != 1) throw DimensionError("expected a scalar, got shape " + to_string(t.dims()));
  return t[0];
}

Var Tape::conv1d(Var x, Var w, std::size_t stride, std::size_t padding) {
  node(x);
  node(w);
  Tensor y = ops::conv1d(val(x.id), val(w.id), stride, padding);
  return push(std::move(y), [xi = x.id, wi = w.id, stride, padding](Tape& t, std::size_t self) {
    ops::conv1d_backward(t.val(xi), t.val(wi), t.nodes_[self].grad, stride, padding, t.grad_target(xi),
                         t.grad_target(wi));
  });
}

Var Tape::batchnorm(Var x, Var gamma, Var beta, RunningStats& stats, ops::Mode mode,
                    const ops::BatchNormOptions& opts) {
  node(x);
  node(gamma);
  node(beta);
  ops::BatchNormCache cache;
  Tensor y = ops::batchnorm(val(x.id), val(gamma.id), val(beta.id), stats.mean, stats.var, mode, opts, &cache);
  return push(std::move(y), [xi = x.id, gi = gamma.id, bi = beta.id, cache = std::move(cache)](Tape& t,
                                                                                              std::size_t self) {
    ops::batchnorm_backward(t.nodes_[self].grad, t.val(gi), cache, t.grad_target(xi), t.grad_target(gi),
                            t.grad_target(bi));
  });
}

Var Tape::relu(Var x) {
  node(x);
  Tensor y = ops::relu(val(x.id));
  return push(std::move(y), [xi = x.id](Tape& t, std::size_t self) {
    ops::relu_backward(t.val(xi), t.nodes_[self].grad, t.grad_target(xi));
  });
}

Var Tape::add(Var a, Var b) {
  node(a);
  node(b);
  Tensor y = ops::add(val(a.id), val(b.id));
  return push(std::move(y), [ai = a.id, bi = b.id](Tape& t, std::size_t self) {
    const Tensor& g = t.nodes_[self].grad;
    for (std::size_t id : {ai, bi}) {
      Tensor* dst = t.grad_target(id);
      if (!dst) continue;
      for (std::size_t i = 0; i < g.size(); ++i) (*dst)[i] += g[i];
    }
  });
}

Var Tape::global_avg_pool(Var x) {
  node(x);
  Tensor y = ops::global_avg_pool(val(x.id));
  return push(std::move(y), [xi = x.id](Tape& t, std::size_t self) {
    ops::global_avg_pool_backward(t.nodes_[self].grad, t.val(xi).dim(2), t.grad_target(xi));
  });
}

Var Tape::dense(Var x, Var w, Var bias) {
  node(x);
  node(w);
  node(bias);
  Tensor y = ops::dense(val(x.id), val(w.id), val(bias.id));
  return push(std::move(y), [xi = x.id, wi = w.id, bi = bias.id](Tape& t, std::size_t self) {
    ops::dense_backward(t.val(xi), t.val(wi), t.nodes_[self].grad, t.grad_target(xi), t.grad_target(wi),
                        t.grad_target(bi));
  });
}

Var Tape::softmax_cross_entropy(Var logits, std::span<const int> labels) {
  node(logits);
  ops::CrossEntropyResult r = ops::softmax_cross_entropy(val(logits.id), labels);
  Var out = push(Tensor({1}, std::vector<double>{r.loss}),
                 [li = logits.id, lab = std::vector<int>(labels.begin(), labels.end())](Tape& t, std::size_t self) {
                   ops::softmax_cross_entropy_backward(t.nodes_[self].aux, lab, t.nodes_[self].grad[0],
                                                       t.grad_target(li));
                 });
  nodes_[out.id].aux = std::move(r.probabilities);
  return out;
}

void Tape::backward(Var loss) {
  if (nodes_.empty()) throw StateError("backward called before a forward pass was recorded");
  if (consumed_) throw StateError("backward already ran on this tape");
  Node& root = node(loss);
  if (root.value.size() != 1) throw DimensionError("backward needs a scalar loss, got " + to_string(root.value.dims()));
  consumed_ = true;
  grad_buffer(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backprop && has_grad(i)) n.backprop(*this, i);
  }
}

}  // namespace afresnet
