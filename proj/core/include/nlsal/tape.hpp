#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "nlsal/tensor.hpp"

namespace nlsal {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  [[nodiscard]] const Tensor& value() const;
  [[nodiscard]] const Shape& shape() const { return value().shape(); }
};

/// Ordered record of executed operations (define-by-run). Each recorded node
/// owns its output value; parameters are referenced, not copied, and receive
/// their gradient in Tensor::grad() when backward() runs.
///
/// A tape and the tensors it references belong to one thread.
class Tape {
 public:
  /// Called during backward() with the gradient of the node's output. The
  /// function adds its contribution into the input gradients via
  /// Tape::accumulate / Tape::grad_buffer.
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Leaf whose gradient is tracked on the tape but not exported.
  Var leaf(Tensor value);
  /// Leaf bound to an external tensor; backward() adds into param.grad().
  /// The tensor must outlive the tape.
  Var parameter(Tensor& param);
  /// Read-only view of an external tensor; no gradient.
  Var parameter(const Tensor& param);

  /// Records an op output. When none of `inputs` requires a gradient the
  /// backward function is dropped.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

  [[nodiscard]] const Tensor& value(Var v) const;
  [[nodiscard]] bool requires_grad(Var v) const;
  /// Gradient accumulated so far for `v` (zeros before backward()).
  [[nodiscard]] const Tensor& grad(Var v) const;
  /// Mutable gradient buffer of `v`, allocated on first use.
  Tensor& grad_buffer(Var v);
  /// grad(v) += delta. No-op when v does not require a gradient.
  void accumulate(Var v, const Tensor& delta);

  /// Reverse sweep from a scalar loss. Every operation is visited once, in
  /// reverse recording order.
  void backward(Var loss);

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] Var var(std::size_t id) { return Var{this, id}; }

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    Tensor* grad_sink = nullptr;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var push(Node node);
  Node& node(Var v);
  [[nodiscard]] const Node& node(Var v) const;

  std::vector<Node> nodes_;
};

}  // namespace nlsal
