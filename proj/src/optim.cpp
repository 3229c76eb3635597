#include "stylip/optim.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "stylip/errors.hpp"

namespace stylip {

AdamState::AdamState(const Shape& shape, AdamConfig cfg, double scale)
    : config(cfg), lr_scale(scale), first_moment(shape), second_moment(shape) {
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(cfg.lr > 0.0) || !(cfg.epsilon > 0.0) || !(scale > 0.0)) {
    throw ConfigError("Adam lr, lr scale and epsilon must be positive");
  }
}

void adam_step(AdamState& state, Tensor& param, const Tensor& grad) {
  if (param.shape() != grad.shape() || param.shape() != state.first_moment.shape()) {
    throw DimensionError("adam_step: parameter " + shape_string(param.shape()) + ", gradient " +
                         shape_string(grad.shape()) + ", moments " +
                         shape_string(state.first_moment.shape()));
  }
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double lr = c.lr * state.lr_scale;
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  auto& m = state.first_moment;
  auto& v = state.second_moment;
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * grad[i];
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& p, double h) {
  std::vector<std::size_t> all(p.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return finite_diff_grad(f, p, h, all);
}

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& p, double h,
                        std::span<const std::size_t> coords) {
  if (!(h > 0.0)) throw DomainError("finite_diff_grad: step must be positive");
  Tensor grad(p.shape());
  Tensor probe = p;
  for (std::size_t i : coords) {
    if (i >= p.size()) throw DimensionError("finite_diff_grad: coordinate out of range");
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = f(probe);
    probe[i] = orig - h;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace stylip
