#pragma once

#include <memory>
#include <string>

#include "dawnfm/core/tensor.hpp"

namespace dawnfm::ops {

/// Linear forward map A with its adjoint.
///
/// Implementations are immutable after construction; apply and adjoint are
/// pure and may be called concurrently.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual std::string name() const = 0;
  virtual Shape domain_shape() const = 0;
  virtual Shape range_shape() const = 0;
  virtual Tensor apply(const Tensor& x) const = 0;
  virtual Tensor adjoint(const Tensor& y) const = 0;

  std::size_t domain_size() const { return shape_numel(domain_shape()); }
  std::size_t range_size() const { return shape_numel(range_shape()); }

  /// Applies the operator to every slice of a leading batch axis.
  Tensor apply_batch(const Tensor& xs) const { return map_batch(xs, domain_shape(), range_shape(), false); }
  Tensor adjoint_batch(const Tensor& ys) const { return map_batch(ys, range_shape(), domain_shape(), true); }

 protected:
  void check_domain(const Tensor& x) const { require_shape(x, domain_shape(), (name() + " apply").c_str()); }
  void check_range(const Tensor& y) const { require_shape(y, range_shape(), (name() + " adjoint").c_str()); }

 private:
  Tensor map_batch(const Tensor& in, const Shape& in_shape, const Shape& out_shape, bool adj) const {
    const std::size_t in_n = shape_numel(in_shape);
    if (in.ndim() < 1 || in.size() % in_n != 0 || in.size() / in_n != in.dim(0)) {
      throw ShapeError(name() + ": batch of shape " + to_string(in.shape()) + " incompatible with " +
                       to_string(in_shape));
    }
    const std::size_t batch = in.dim(0);
    Shape shape{batch};
    shape.insert(shape.end(), out_shape.begin(), out_shape.end());
    Tensor out(shape);
    const std::size_t out_n = shape_numel(out_shape);
    for (std::size_t b = 0; b < batch; ++b) {
      Tensor item(in_shape, std::vector<double>(in.data() + b * in_n, in.data() + (b + 1) * in_n));
      Tensor r = adj ? adjoint(item) : apply(item);
      std::copy(r.data(), r.data() + out_n, out.data() + b * out_n);
    }
    return out;
  }
};

using OperatorPtr = std::shared_ptr<const LinearOperator>;

/// Explicit matrix operator; domain (cols,), range (rows,).
class DenseOperator final : public LinearOperator {
 public:
  /// `matrix` is rows x cols.
  explicit DenseOperator(Tensor matrix) : m_(std::move(matrix)) {
    if (m_.ndim() != 2) throw ShapeError("DenseOperator needs a 2D matrix");
  }

  std::string name() const override { return "dense"; }
  Shape domain_shape() const override { return {m_.dim(1)}; }
  Shape range_shape() const override { return {m_.dim(0)}; }
  const Tensor& matrix() const { return m_; }

  Tensor apply(const Tensor& x) const override {
    if (x.size() != m_.dim(1)) throw ShapeError("dense apply: size mismatch");
    Tensor y({m_.dim(0)});
    for (std::size_t r = 0; r < m_.dim(0); ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < m_.dim(1); ++c) s += m_.at(r, c) * x[c];
      y[r] = s;
    }
    return y;
  }

  Tensor adjoint(const Tensor& y) const override {
    if (y.size() != m_.dim(0)) throw ShapeError("dense adjoint: size mismatch");
    Tensor x({m_.dim(1)});
    for (std::size_t r = 0; r < m_.dim(0); ++r) {
      for (std::size_t c = 0; c < m_.dim(1); ++c) x[c] += m_.at(r, c) * y[r];
    }
    return x;
  }

 private:
  Tensor m_;
};

/// Dense matrix of any operator, built column by column from unit inputs.
inline Tensor materialize(const LinearOperator& op) {
  const std::size_t n = op.domain_size();
  const std::size_t m = op.range_size();
  Tensor mat({m, n});
  Tensor unit(op.domain_shape());
  for (std::size_t c = 0; c < n; ++c) {
    unit[c] = 1.0;
    Tensor col = op.apply(unit);
    unit[c] = 0.0;
    for (std::size_t r = 0; r < m; ++r) mat.at(r, c) = col[r];
  }
  return mat;
}

}  // namespace dawnfm::ops
