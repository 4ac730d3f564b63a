#pragma once

#include "dawnfm/ops/linear_operator.hpp"

namespace dawnfm::ops {

/// A = [1, 1]: the two-unknown toy problem b = x1 + x2.
class SumOperator final : public LinearOperator {
 public:
  std::string name() const override { return "sum"; }
  Shape domain_shape() const override { return {2}; }
  Shape range_shape() const override { return {1}; }

  Tensor apply(const Tensor& x) const override {
    check_domain(x);
    return Tensor({1}, {x[0] + x[1]});
  }

  Tensor adjoint(const Tensor& b) const override {
    check_range(b);
    return Tensor({2}, {b[0], b[0]});
  }
};

}  // namespace dawnfm::ops
