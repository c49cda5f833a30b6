#include "nlsal/tape.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace nlsal {

const Tensor& Var::value() const { return tape->value(*this); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Tape::Node& Tape::node(Var v) {
  if (v.tape != this || v.id >= nodes_.size()) throw std::invalid_argument("Var belongs to another tape");
  return nodes_[v.id];
}

const Tape::Node& Tape::node(Var v) const {
  if (v.tape != this || v.id >= nodes_.size()) throw std::invalid_argument("Var belongs to another tape");
  return nodes_[v.id];
}

Var Tape::constant(Tensor value) {
  Node n;
  n.owned = std::move(value);
  return push(std::move(n));
}

Var Tape::leaf(Tensor value) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::parameter(Tensor& param) {
  Node n;
  n.external = &param;
  n.grad_sink = &param;
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::parameter(const Tensor& param) {
  Node n;
  n.external = &param;
  return push(std::move(n));
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward) {
  Node n;
  n.owned = std::move(value);
  for (const Var& in : inputs) {
    if (node(in).requires_grad) n.requires_grad = true;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

const Tensor& Tape::value(Var v) const {
  const Node& n = node(v);
  return n.external != nullptr ? *n.external : n.owned;
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

const Tensor& Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.shape() != value(v).shape()) {
    throw std::logic_error(fmt::format("no gradient recorded for tape node {}", v.id));
  }
  return n.grad;
}

Tensor& Tape::grad_buffer(Var v) {
  Node& n = node(v);
  const Shape& s = value(v).shape();
  if (!(n.grad.shape() == s) || n.grad.size() != s.numel()) n.grad = Tensor(s);
  return n.grad;
}

void Tape::accumulate(Var v, const Tensor& delta) {
  if (!node(v).requires_grad) return;
  Tensor& g = grad_buffer(v);
  require_same_shape(delta.shape(), g.shape(), "gradient accumulation");
  auto gd = g.data();
  const auto dd = delta.data();
  for (std::size_t i = 0; i < gd.size(); ++i) gd[i] += dd[i];
}

void Tape::backward(Var loss) {
  if (nodes_.empty()) throw std::logic_error("backward on an empty tape");
  if (value(loss).size() != 1) {
    throw ShapeError(fmt::format("backward needs a scalar loss, got shape {}", value(loss).shape().str()));
  }
  // Zero every tracked gradient, reachable or not.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].requires_grad) {
      Var v{this, i};
      Tensor& g = grad_buffer(v);
      std::fill(g.data().begin(), g.data().end(), 0.0);
    }
  }
  if (node(loss).requires_grad) grad_buffer(loss)[0] = 1.0;

  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad) continue;
    if (n.backward) n.backward(*this, n.grad);
  }
  for (Node& n : nodes_) {
    if (n.grad_sink == nullptr) continue;
    auto sink = n.grad_sink->grad();
    const auto g = n.grad.data();
    for (std::size_t i = 0; i < sink.size(); ++i) sink[i] += g[i];
  }
}

}  // namespace nlsal
