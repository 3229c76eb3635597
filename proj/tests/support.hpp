#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "stylip/tape.hpp"
#include "stylip/tensor.hpp"

namespace stylip::testing {

inline Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(gen);
  return t;
}

// Builds a fresh tape, places `inputs` on it as parameters and returns the
// scalar produced by `f`. Used both for the analytic gradient and, through
// central differences written out here, as the test's own oracle.
using ScalarGraph = std::function<Var(Tape&, std::vector<Var>&)>;

inline std::vector<Tensor> tape_gradients(const ScalarGraph& f, const std::vector<Tensor>& inputs) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.parameter(t));
  Var out = f(tape, vars);
  tape.backward(out);
  std::vector<Tensor> grads;
  for (const auto& v : vars) grads.push_back(tape.grad(v));
  return grads;
}

inline double evaluate(const ScalarGraph& f, const std::vector<Tensor>& inputs) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.constant(t));
  return f(tape, vars).value().item();
}

// Largest |analytic - numeric| / max(|analytic|, |numeric|, 1e-6) over every input scalar.
inline double worst_gradient_error(const ScalarGraph& f, std::vector<Tensor> inputs, double h = 1e-5) {
  const auto analytic = tape_gradients(f, inputs);
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double orig = inputs[k][i];
      inputs[k][i] = orig + h;
      const double up = evaluate(f, inputs);
      inputs[k][i] = orig - h;
      const double down = evaluate(f, inputs);
      inputs[k][i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[k][i];
      worst = std::max(worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6}));
    }
  }
  return worst;
}

}  // namespace stylip::testing
