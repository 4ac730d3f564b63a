#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "dawnfm/core/rng.hpp"

namespace dawnfm::data {

/// Images made of 1..max_ellipses rotated ellipses with intensities in
/// (0.2, 1), summed and clamped to [0, 1]. Every ellipse stays clear of the
/// outermost rows and columns.
inline Tensor gen_phantoms(SeededRng& rng, std::size_t count, std::size_t side, std::size_t max_ellipses = 4) {
  if (side < 8) throw ParameterError("gen_phantoms: side must be >= 8");
  if (count == 0) throw ParameterError("gen_phantoms: count must be >= 1");
  if (max_ellipses == 0) throw ParameterError("gen_phantoms: need at least one ellipse per image");
  const double s = static_cast<double>(side);
  Tensor out({count, side, side});
  for (std::size_t n = 0; n < count; ++n) {
    double* img = out.data() + n * side * side;
    const std::size_t k = 1 + rng.index(max_ellipses);
    for (std::size_t e = 0; e < k; ++e) {
      const double a = rng.uniform(0.12 * s, 0.3 * s);
      const double b = rng.uniform(0.12 * s, 0.3 * s);
      const double theta = rng.uniform(0.0, std::numbers::pi);
      const double c = std::cos(theta), sn = std::sin(theta);
      const double ex = std::sqrt(a * a * c * c + b * b * sn * sn);
      const double ey = std::sqrt(a * a * sn * sn + b * b * c * c);
      const double cx = rng.uniform(1.0 + ex, s - 2.0 - ex);
      const double cy = rng.uniform(1.0 + ey, s - 2.0 - ey);
      const double value = 0.2 + 0.8 * rng.uniform_open();
      for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
          const double dx = static_cast<double>(x) - cx;
          const double dy = static_cast<double>(y) - cy;
          const double u = (dx * c + dy * sn) / a;
          const double v = (-dx * sn + dy * c) / b;
          if (u * u + v * v <= 1.0) img[y * side + x] += value;
        }
      }
    }
    for (std::size_t i = 0; i < side * side; ++i) img[i] = std::clamp(img[i], 0.0, 1.0);
  }
  return out;
}

/// Two-component isotropic Gaussian mixture in the plane.
struct DuathlonPrior {
  std::array<std::array<double, 2>, 2> means{{{1.0, 1.0}, {3.0, 3.0}}};
  std::array<double, 2> stds{0.25, 0.25};
  std::array<double, 2> weights{0.5, 0.5};

  void validate() const {
    if (!(weights[0] > 0.0 && weights[1] > 0.0) || std::abs(weights[0] + weights[1] - 1.0) > 1e-12) {
      throw ConfigError("duathlon prior: weights must be positive and sum to 1");
    }
    if (!(stds[0] > 0.0 && stds[1] > 0.0)) throw ConfigError("duathlon prior: stds must be positive");
  }
};

/// (count, 2) mixture draws; `components`, when given, receives the chosen lobe per sample.
inline Tensor sample_duathlon_prior(SeededRng& rng, std::size_t count, const DuathlonPrior& prior = {},
                                    std::vector<int>* components = nullptr) {
  prior.validate();
  if (count == 0) throw ParameterError("sample_duathlon_prior: count must be >= 1");
  Tensor out({count, 2});
  if (components) components->assign(count, 0);
  for (std::size_t i = 0; i < count; ++i) {
    const int k = rng.uniform() < prior.weights[0] ? 0 : 1;
    if (components) (*components)[i] = k;
    out[2 * i] = prior.means[k][0] + prior.stds[k] * rng.normal();
    out[2 * i + 1] = prior.means[k][1] + prior.stds[k] * rng.normal();
  }
  return out;
}

}  // namespace dawnfm::data
