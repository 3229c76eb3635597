#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stylip/container.hpp"
#include "stylip/tape.hpp"

namespace stylip {

/// Ordered, named trainable tensors. Declaration order is the order used in
/// checkpoints and by the optimizer.
class ParameterSet {
 public:
  void add(std::string name, Tensor value);

  bool contains(std::string_view name) const;
  std::size_t index(std::string_view name) const;
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;

  std::size_t size() const { return items_.size(); }
  std::size_t scalar_count() const;
  std::vector<NamedTensor>& items() { return items_; }
  const std::vector<NamedTensor>& items() const { return items_; }

  friend bool operator==(const ParameterSet& a, const ParameterSet& b);

 private:
  std::vector<NamedTensor> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// A ParameterSet placed on a tape, either as gradient-requiring leaves
/// (training) or as constants (evaluation).
class Binding {
 public:
  Binding(Tape& tape, const ParameterSet& params, bool trainable);

  Tape& tape() const { return *tape_; }
  Var operator()(std::string_view name) const;
  const std::vector<Var>& vars() const { return vars_; }
  // Gradients in parameter declaration order, after tape().backward().
  std::vector<Tensor> gradients() const;

 private:
  Tape* tape_;
  const ParameterSet* params_;
  std::vector<Var> vars_;
};

}  // namespace stylip
