#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "dawnfm/ops/linear_operator.hpp"

namespace dawnfm::ops {

/// Parallel-beam Radon transform of an s x s image.
///
/// The image is zero padded by floor(s/2) on every side. Angles are spread
/// uniformly over [0, 180) degrees, detectors have unit spacing and are
/// centered on the padded grid, and each line integral is a Riemann sum of
/// bilinear samples taken every `step` pixels along the ray. The adjoint
/// replays exactly the same samples and weights, so it is the transpose of the
/// discretized forward map.
class RadonOperator final : public LinearOperator {
 public:
  explicit RadonOperator(std::size_t side, std::size_t n_angles = 360, double step = 0.5)
      : side_(side), n_angles_(n_angles), step_(step) {
    if (side < 1) throw ParameterError("radon side must be >= 1");
    if (n_angles < 1) throw ParameterError("radon needs at least one angle");
    if (!(step > 0.0) || step > 0.5) throw ParameterError("radon ray step must be in (0, 0.5]");
    pad_ = side / 2;
    padded_ = side + 2 * pad_;
    const double half_diag = 0.5 * std::sqrt(2.0) * static_cast<double>(padded_);
    n_samples_ = static_cast<std::size_t>(std::ceil(2.0 * half_diag / step_)) + 1;
    ray_start_ = -0.5 * static_cast<double>(n_samples_ - 1) * step_;
    angles_deg_.resize(n_angles);
    cos_.resize(n_angles);
    sin_.resize(n_angles);
    for (std::size_t a = 0; a < n_angles; ++a) {
      angles_deg_[a] = 180.0 * static_cast<double>(a) / static_cast<double>(n_angles);
      const double th = angles_deg_[a] * std::numbers::pi / 180.0;
      cos_[a] = std::cos(th);
      sin_[a] = std::sin(th);
    }
  }

  std::string name() const override { return "radon"; }
  Shape domain_shape() const override { return {side_, side_}; }
  Shape range_shape() const override { return {n_angles_, n_detectors()}; }

  std::size_t side() const { return side_; }
  std::size_t n_angles() const { return n_angles_; }
  std::size_t n_detectors() const { return 2 * side_ + 1; }
  std::size_t pad() const { return pad_; }
  std::size_t padded_side() const { return padded_; }
  const std::vector<double>& angles_degrees() const { return angles_deg_; }

  Tensor apply(const Tensor& x) const override {
    check_domain(x);
    const Tensor padded = pad_image(x);
    Tensor sino(range_shape());
    for_each_ray([&](std::size_t a, std::size_t d, auto&& visit_weights) {
      double acc = 0.0;
      visit_weights([&](std::size_t idx, double w) { acc += w * padded[idx]; });
      sino.at(a, d) = acc;
    });
    return sino;
  }

  Tensor adjoint(const Tensor& sino) const override {
    check_range(sino);
    Tensor padded({padded_, padded_});
    for_each_ray([&](std::size_t a, std::size_t d, auto&& visit_weights) {
      const double v = sino.at(a, d);
      if (v == 0.0) return;
      visit_weights([&](std::size_t idx, double w) { padded[idx] += w * v; });
    });
    return unpad_image(padded);
  }

  Tensor pad_image(const Tensor& x) const {
    Tensor out({padded_, padded_});
    for (std::size_t r = 0; r < side_; ++r) {
      for (std::size_t c = 0; c < side_; ++c) out.at(r + pad_, c + pad_) = x.at(r, c);
    }
    return out;
  }

  Tensor unpad_image(const Tensor& padded) const {
    Tensor out({side_, side_});
    for (std::size_t r = 0; r < side_; ++r) {
      for (std::size_t c = 0; c < side_; ++c) out.at(r, c) = padded.at(r + pad_, c + pad_);
    }
    return out;
  }

 private:
  // Calls fn(angle, detector, visit) where visit(sink) feeds sink(flat padded
  // index, weight) for every bilinear tap along that ray.
  template <typename Fn>
  void for_each_ray(Fn&& fn) const {
    const double center = 0.5 * static_cast<double>(padded_ - 1);
    const double limit = static_cast<double>(padded_ - 1);
    const auto n = static_cast<std::ptrdiff_t>(padded_);
    for (std::size_t a = 0; a < n_angles_; ++a) {
      const double ca = cos_[a];
      const double sa = sin_[a];
      for (std::size_t d = 0; d < n_detectors(); ++d) {
        const double u = static_cast<double>(d) - static_cast<double>(side_);
        auto visit = [&](auto&& sink) {
          for (std::size_t k = 0; k < n_samples_; ++k) {
            const double tau = ray_start_ + static_cast<double>(k) * step_;
            const double px = center + u * ca - tau * sa;
            const double py = center + u * sa + tau * ca;
            if (px <= -1.0 || py <= -1.0 || px >= limit + 1.0 || py >= limit + 1.0) continue;
            const double fx0 = std::floor(px);
            const double fy0 = std::floor(py);
            const double fx = px - fx0;
            const double fy = py - fy0;
            const auto c0 = static_cast<std::ptrdiff_t>(fx0);
            const auto r0 = static_cast<std::ptrdiff_t>(fy0);
            const double taps[4] = {(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy};
            const std::ptrdiff_t rr[4] = {r0, r0, r0 + 1, r0 + 1};
            const std::ptrdiff_t cc[4] = {c0, c0 + 1, c0, c0 + 1};
            for (int t = 0; t < 4; ++t) {
              if (rr[t] < 0 || cc[t] < 0 || rr[t] >= n || cc[t] >= n || taps[t] == 0.0) continue;
              sink(static_cast<std::size_t>(rr[t] * n + cc[t]), taps[t] * step_);
            }
          }
        };
        fn(a, d, visit);
      }
    }
  }

  std::size_t side_;
  std::size_t n_angles_;
  double step_;
  std::size_t pad_ = 0;
  std::size_t padded_ = 0;
  std::size_t n_samples_ = 0;
  double ray_start_ = 0.0;
  std::vector<double> angles_deg_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

}  // namespace dawnfm::ops
