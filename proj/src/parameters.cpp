#include "stylip/parameters.hpp"

#include "stylip/errors.hpp"

namespace stylip {

void ParameterSet::add(std::string name, Tensor value) {
  if (index_.count(name)) throw ContractError("duplicate parameter '" + name + "'");
  index_.emplace(name, items_.size());
  items_.push_back({std::move(name), std::move(value)});
}

bool ParameterSet::contains(std::string_view name) const { return index_.count(std::string(name)) != 0; }

std::size_t ParameterSet::index(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw LookupError("no parameter named '" + std::string(name) + "'");
  return it->second;
}

Tensor& ParameterSet::at(std::string_view name) { return items_[index(name)].value; }
const Tensor& ParameterSet::at(std::string_view name) const { return items_[index(name)].value; }

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& it : items_) n += it.value.size();
  return n;
}

bool operator==(const ParameterSet& a, const ParameterSet& b) {
  if (a.items_.size() != b.items_.size()) return false;
  for (std::size_t i = 0; i < a.items_.size(); ++i) {
    if (a.items_[i].name != b.items_[i].name || !(a.items_[i].value == b.items_[i].value)) return false;
  }
  return true;
}

Binding::Binding(Tape& tape, const ParameterSet& params, bool trainable) : tape_(&tape), params_(&params) {
  vars_.reserve(params.size());
  for (const auto& it : params.items()) {
    vars_.push_back(trainable ? tape.parameter_ref(it.value) : tape.constant_ref(it.value));
  }
}

Var Binding::operator()(std::string_view name) const { return vars_[params_->index(name)]; }

std::vector<Tensor> Binding::gradients() const {
  std::vector<Tensor> out;
  out.reserve(vars_.size());
  for (const Var& v : vars_) out.push_back(tape_->grad(v));
  return out;
}

}  // namespace stylip
