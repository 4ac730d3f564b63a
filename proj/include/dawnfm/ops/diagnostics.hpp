#pragma once

#include <cmath>
#include <limits>

#include "dawnfm/core/rng.hpp"
#include "dawnfm/ops/linear_operator.hpp"

namespace dawnfm::ops {

/// Max over random (x, y) of |<Ax, y> - <x, A^T y>| / (|<Ax, y>| + tiny).
inline double adjoint_dot_test(const LinearOperator& op, SeededRng& rng, std::size_t trials) {
  if (trials < 1) throw ParameterError("adjoint_dot_test needs at least one trial");
  double worst = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    const Tensor x = sample_standard_normal(rng, op.domain_shape());
    const Tensor y = sample_standard_normal(rng, op.range_shape());
    const double lhs = dot(op.apply(x), y);
    const double rhs = dot(x, op.adjoint(y));
    const double err = std::abs(lhs - rhs) / (std::abs(lhs) + std::numeric_limits<double>::min());
    worst = std::max(worst, err);
  }
  return worst;
}

/// Max relative deviation of A(ax + bz) from aAx + bAz over random inputs.
inline double linearity_error(const LinearOperator& op, SeededRng& rng, std::size_t trials) {
  double worst = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    const Tensor x = sample_standard_normal(rng, op.domain_shape());
    const Tensor z = sample_standard_normal(rng, op.domain_shape());
    const double a = rng.normal();
    const double b = rng.normal();
    const Tensor lhs = op.apply(combine(a, x, b, z));
    const Tensor rhs = combine(a, op.apply(x), b, op.apply(z));
    const double scale = std::max(1.0, std::sqrt(squared_norm(rhs)));
    worst = std::max(worst, max_abs_diff(lhs, rhs) / scale);
  }
  return worst;
}

/// Largest singular value by power iteration on A^T A. The estimate |A v_k|
/// for normalized iterates v_k never decreases with k.
inline double top_singular_value(const LinearOperator& op, std::size_t iters, SeededRng& rng) {
  if (iters < 1) throw ParameterError("top_singular_value needs at least one iteration");
  Tensor v = sample_standard_normal(rng, op.domain_shape());
  v = (1.0 / std::sqrt(squared_norm(v))) * v;
  for (std::size_t k = 0; k < iters; ++k) {
    Tensor w = op.adjoint(op.apply(v));
    const double n = std::sqrt(squared_norm(w));
    if (n == 0.0) return 0.0;
    v = (1.0 / n) * w;
  }
  return std::sqrt(squared_norm(op.apply(v)));
}

}  // namespace dawnfm::ops
