#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "stylip/tensor.hpp"

namespace stylip {

struct AdamConfig {
  double lr = 2e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam moments for one parameter tensor.
struct AdamState {
  AdamConfig config;
  std::size_t step = 0;
  double lr_scale = 1.0;  ///< per-tensor multiplier on config.lr
  Tensor first_moment;
  Tensor second_moment;

  AdamState() = default;
  AdamState(const Shape& shape, AdamConfig cfg, double lr_scale = 1.0);
};

/// One bias-corrected Adam update of `param` in place.
void adam_step(AdamState& state, Tensor& param, const Tensor& grad);

/// Central differences (f(p + h e_i) - f(p - h e_i)) / 2h for every coordinate.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& p, double h);

/// Same, restricted to `coords`; other entries of the result are zero.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& p, double h,
                        std::span<const std::size_t> coords);

}  // namespace stylip
