#pragma once

#include <string>

#include "dawnfm/core/tensor.hpp"

namespace dawnfm::infer {

/// Classical fourth-order Runge-Kutta from t = 0 to t = 1 with fixed step
/// h = 1 / n_steps. `field(x, t)` returns dx/dt with the shape of x.
template <typename Field>
Tensor rk4_integrate(Field&& field, Tensor x, std::size_t n_steps) {
  if (n_steps < 1) throw ParameterError("rk4_integrate: n_steps must be >= 1");
  const double h = 1.0 / static_cast<double>(n_steps);
  const std::size_t n = x.size();
  Tensor stage(x.shape());
  for (std::size_t step = 0; step < n_steps; ++step) {
    const double t = static_cast<double>(step) * h;
    const Tensor k1 = field(x, t);
    for (std::size_t i = 0; i < n; ++i) stage[i] = x[i] + 0.5 * h * k1[i];
    const Tensor k2 = field(stage, t + 0.5 * h);
    for (std::size_t i = 0; i < n; ++i) stage[i] = x[i] + 0.5 * h * k2[i];
    const Tensor k3 = field(stage, t + 0.5 * h);
    for (std::size_t i = 0; i < n; ++i) stage[i] = x[i] + h * k3[i];
    const Tensor k4 = field(stage, t + h);
    for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!x.all_finite()) {
      throw InferenceError("non-finite state after RK4 step " + std::to_string(step) + " of " +
                           std::to_string(n_steps));
    }
  }
  return x;
}

}  // namespace dawnfm::infer
