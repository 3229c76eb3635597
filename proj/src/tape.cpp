#include "stylip/tape.hpp"

#include <string>

#include "stylip/errors.hpp"

namespace stylip {

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("use of an unbound Var");
  return tape_->value(id_);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(id_); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.op = "constant";
  n.owned = std::move(value);
  return push(std::move(n));
}

Var Tape::constant_ref(const Tensor& value) {
  Node n;
  n.op = "constant";
  n.ref = &value;
  return push(std::move(n));
}

Var Tape::parameter(Tensor value) {
  Node n;
  n.op = "parameter";
  n.owned = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::parameter_ref(const Tensor& value) {
  Node n;
  n.op = "parameter";
  n.ref = &value;
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::record(std::string_view op, Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node n;
  n.op = op;
  n.owned = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    if (in.tape_ != this) throw ContractError(std::string(op) + ": input recorded on another tape");
    n.inputs.push_back(in.id_);
    n.requires_grad = n.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

const Tensor& Tape::value(std::size_t id) const { return nodes_.at(id).value(); }

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw ContractError("backward: loss recorded on another tape");
  const Tensor& lv = nodes_[loss.id_].value();
  if (lv.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " + shape_string(lv.shape()));
  }
  for (auto& n : nodes_) {
    n.grad = Tensor();
    n.has_grad = false;
  }
  backward_order_.clear();
  if (!nodes_[loss.id_].requires_grad) return;

  nodes_[loss.id_].grad = Tensor(lv.shape(), 1.0);
  nodes_[loss.id_].has_grad = true;

  std::vector<Tensor*> slots;
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.has_grad || !node.backward) continue;
    slots.assign(node.inputs.size(), nullptr);
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      Node& in = nodes_[node.inputs[k]];
      if (!in.requires_grad) continue;
      if (!in.has_grad) {
        in.grad = Tensor(in.value().shape(), 0.0);
        in.has_grad = true;
      }
      slots[k] = &in.grad;
    }
    node.backward(node.value(), node.grad, slots);
    backward_order_.push_back(i);
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id_);
  if (n.has_grad) return n.grad;
  return Tensor(n.value().shape(), 0.0);
}

}  // namespace stylip
