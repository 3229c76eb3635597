#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "stylip/tensor.hpp"

namespace stylip {

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  bool requires_grad() const;

 private:
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;

  friend class Tape;
};

/// Reverse-mode recording of tensor operations.
///
/// Every op appends one node. `backward` seeds d(loss)/d(loss) = 1 and walks
/// the nodes in reverse recording order, calling each op's backward exactly
/// once. Nodes that do not depend on any gradient-requiring leaf are skipped,
/// which keeps frozen sub-graphs (encoder weights, cached features) free.
class Tape {
 public:
  /// Receives the op's output value, the incoming gradient and one slot per
  /// input. A slot is null when that input needs no gradient; otherwise the
  /// backward adds its contribution into it.
  using BackwardFn =
      std::function<void(const Tensor& out, const Tensor& grad_out, std::span<Tensor* const> grad_in)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // The referenced tensor must outlive the tape.
  Var constant_ref(const Tensor& value);
  Var parameter(Tensor value);
  Var parameter_ref(const Tensor& value);

  Var record(std::string_view op, Tensor value, std::vector<Var> inputs, BackwardFn backward);

  void backward(Var loss);

  const Tensor& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  // Zero tensor when the node was not reached by the last backward pass.
  Tensor grad(Var v) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  std::string_view op_name(Var v) const { return nodes_.at(v.id()).op; }
  // Node ids whose backward ran during the last pass, in call order.
  const std::vector<std::size_t>& backward_order() const noexcept { return backward_order_; }

 private:
  struct Node {
    std::string_view op;
    Tensor owned;
    const Tensor* ref = nullptr;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    Tensor grad;
    bool has_grad = false;

    const Tensor& value() const { return ref ? *ref : owned; }
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  std::vector<std::size_t> backward_order_;
};

}  // namespace stylip
