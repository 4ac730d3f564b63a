#pragma once

#include <cmath>

#include "dawnfm/core/fft.hpp"
#include "dawnfm/ops/linear_operator.hpp"

namespace dawnfm::ops {

/// Signed offset of FFT-layout index `i` on a periodic grid of length `n`.
inline double wrapped_offset(std::size_t i, std::size_t n) {
  return i <= n / 2 ? static_cast<double>(i) : static_cast<double>(i) - static_cast<double>(n);
}

/// Gaussian point spread function K(x, y) ~ exp(-x^2/sx^2 - y^2/sy^2) sampled
/// on the integer grid, origin at (0, 0) in FFT layout, normalized to sum 1.
/// x runs along columns, y along rows.
inline Tensor blur_build_kernel(std::size_t side, double sigma_x, double sigma_y) {
  if (side < 1) throw ParameterError("blur kernel side must be >= 1");
  if (!(sigma_x > 0.0) || !(sigma_y > 0.0)) throw ParameterError("blur widths must be positive");
  Tensor k({side, side});
  double total = 0.0;
  for (std::size_t r = 0; r < side; ++r) {
    const double y = wrapped_offset(r, side);
    for (std::size_t c = 0; c < side; ++c) {
      const double x = wrapped_offset(c, side);
      const double v = std::exp(-x * x / (sigma_x * sigma_x) - y * y / (sigma_y * sigma_y));
      k.at(r, c) = v;
      total += v;
    }
  }
  for (auto& v : k.values()) v /= total;
  return k;
}

/// Periodic Gaussian blur of square images, computed in the Fourier domain.
///
/// With channels == 1 the domain is (side, side); otherwise (channels, side,
/// side) and every channel is blurred independently. The kernel is even, so
/// its transform is real and the operator is self-adjoint.
class GaussianBlurOperator final : public LinearOperator {
 public:
  GaussianBlurOperator(std::size_t side, double sigma_x = 3.0, double sigma_y = 3.0, std::size_t channels = 1)
      : side_(side),
        channels_(channels),
        sigma_x_(sigma_x),
        sigma_y_(sigma_y),
        kernel_(blur_build_kernel(side, sigma_x, sigma_y)),
        kernel_hat_(fft2(kernel_)) {
    if (channels == 0) throw ParameterError("blur channels must be >= 1");
  }

  std::string name() const override { return "blur"; }
  Shape domain_shape() const override {
    return channels_ == 1 ? Shape{side_, side_} : Shape{channels_, side_, side_};
  }
  Shape range_shape() const override { return domain_shape(); }

  std::size_t side() const { return side_; }
  std::size_t channels() const { return channels_; }
  double sigma_x() const { return sigma_x_; }
  double sigma_y() const { return sigma_y_; }
  const Tensor& kernel() const { return kernel_; }
  const ComplexGrid& kernel_spectrum() const { return kernel_hat_; }

  Tensor apply(const Tensor& x) const override {
    check_domain(x);
    return convolve(x);
  }

  Tensor adjoint(const Tensor& y) const override {
    check_range(y);
    return convolve(y);
  }

 private:
  Tensor convolve(const Tensor& x) const {
    Tensor out(x.shape());
    const std::size_t plane = side_ * side_;
    for (std::size_t ch = 0; ch < channels_; ++ch) {
      ComplexGrid g(side_, side_);
      for (std::size_t i = 0; i < plane; ++i) g.data[i] = Complex(x[ch * plane + i], 0.0);
      g = fft2(std::move(g), FftDirection::forward);
      for (std::size_t i = 0; i < plane; ++i) g.data[i] *= kernel_hat_.data[i];
      g = fft2(std::move(g), FftDirection::inverse);
      for (std::size_t i = 0; i < plane; ++i) out[ch * plane + i] = g.data[i].real();
    }
    return out;
  }

  std::size_t side_;
  std::size_t channels_;
  double sigma_x_;
  double sigma_y_;
  Tensor kernel_;
  ComplexGrid kernel_hat_;
};

}  // namespace dawnfm::ops
